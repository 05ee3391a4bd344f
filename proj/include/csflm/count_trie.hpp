// Copyright 2026 The csflm Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CSFLM_COUNT_TRIE_HPP
#define CSFLM_COUNT_TRIE_HPP

#include <cstdint>
#include <cstring>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "csflm/error.hpp"

namespace csflm {

// Counts over fixed-arity factor-value tuples: context tuple -> successor
// word counts, with per-context totals and distinct-successor counts.
// Successor maps are ordered so that sums over them are canonical.
class CountTrie {
 public:
  struct Node {
    std::map<int, std::int64_t> successors;
    std::int64_t total = 0;
    // Backoff weight for this context, filled in by the owning model after
    // counting. Meaningless for unsmoothed tries.
    double alpha = 1.0;
  };

  explicit CountTrie(int arity = 0) : arity_(arity) {}

  int arity() const { return arity_; }
  std::size_t num_contexts() const { return contexts_.size(); }

  void add(std::span<const int> context, int word, std::int64_t n = 1) {
    Node& node = contexts_[encode(context)];
    node.successors[word] += n;
    node.total += n;
  }

  const Node* find(std::span<const int> context) const {
    auto it = contexts_.find(encode(context));
    return it == contexts_.end() ? nullptr : &it->second;
  }

  Node* find_mutable(std::span<const int> context) {
    auto it = contexts_.find(encode(context));
    return it == contexts_.end() ? nullptr : &it->second;
  }

  std::int64_t context_total(std::span<const int> context) const {
    const Node* node = find(context);
    return node ? node->total : 0;
  }

  std::int64_t count(std::span<const int> context, int word) const {
    const Node* node = find(context);
    if (!node) return 0;
    auto it = node->successors.find(word);
    return it == node->successors.end() ? 0 : it->second;
  }

  int distinct_successors(std::span<const int> context) const {
    const Node* node = find(context);
    return node ? static_cast<int>(node->successors.size()) : 0;
  }

  // Count-of-counts over successor counts, out[k] = number of (context,word)
  // pairs with count k, for k in 1..max_k.
  std::vector<std::int64_t> count_of_counts(int max_k) const {
    std::vector<std::int64_t> out(static_cast<std::size_t>(max_k) + 1, 0);
    for (const auto& [_, node] : contexts_) {
      for (const auto& [__, c] : node.successors) {
        if (c >= 1 && c <= max_k) ++out[static_cast<std::size_t>(c)];
      }
    }
    return out;
  }

  // Visits contexts in canonical (lexicographic tuple) order.
  template <typename F>
  void for_each_sorted(F&& fn) const {
    std::vector<const std::string*> keys;
    keys.reserve(contexts_.size());
    for (const auto& [key, _] : contexts_) keys.push_back(&key);
    std::sort(keys.begin(), keys.end(),
              [](const std::string* a, const std::string* b) { return *a < *b; });
    for (const std::string* key : keys) {
      fn(decode(*key), contexts_.at(*key));
    }
  }

  template <typename F>
  void for_each_mutable(F&& fn) {
    for (auto& [key, node] : contexts_) fn(decode(key), node);
  }

  // Sums all successor counts (the trie-wide event total).
  std::int64_t grand_total() const {
    std::int64_t n = 0;
    for (const auto& [_, node] : contexts_) n += node.total;
    return n;
  }

 private:
  // Big-endian packing keeps byte-lexicographic order equal to numeric
  // tuple order for non-negative ids.
  std::string encode(std::span<const int> context) const {
    if (static_cast<int>(context.size()) != arity_) {
      throw InvalidArgument("count trie: context arity mismatch");
    }
    std::string key(static_cast<std::size_t>(arity_) * 4, '\0');
    for (int i = 0; i < arity_; ++i) {
      std::uint32_t v = static_cast<std::uint32_t>(context[static_cast<std::size_t>(i)]);
      key[static_cast<std::size_t>(i) * 4 + 0] = static_cast<char>(v >> 24);
      key[static_cast<std::size_t>(i) * 4 + 1] = static_cast<char>(v >> 16);
      key[static_cast<std::size_t>(i) * 4 + 2] = static_cast<char>(v >> 8);
      key[static_cast<std::size_t>(i) * 4 + 3] = static_cast<char>(v);
    }
    return key;
  }

  static std::vector<int> decode(const std::string& key) {
    std::vector<int> out(key.size() / 4);
    for (std::size_t i = 0; i < out.size(); ++i) {
      std::uint32_t v = 0;
      for (int b = 0; b < 4; ++b) {
        v = (v << 8) | static_cast<unsigned char>(key[i * 4 + static_cast<std::size_t>(b)]);
      }
      out[i] = static_cast<int>(v);
    }
    return out;
  }

  int arity_;
  std::unordered_map<std::string, Node> contexts_;
};

}  // namespace csflm

#endif  // CSFLM_COUNT_TRIE_HPP
