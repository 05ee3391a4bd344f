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

#ifndef CSFLM_FLM_HPP
#define CSFLM_FLM_HPP

#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "csflm/count_trie.hpp"
#include "csflm/lm.hpp"

namespace csflm {

// A conditioning factor: a factor kind at a negative lag, e.g. W(-1), C(-2).
struct FactorRef {
  FactorKind kind = FactorKind::Word;
  int lag = -1;

  bool operator==(const FactorRef&) const = default;
  // Age order: more distant lags are older; equal lags order by kind.
  static bool older(const FactorRef& a, const FactorRef& b);
  std::string to_string() const;       // "W(-1)"
  static FactorRef parse(const std::string& s);
};

enum class Combine { FixedPath, Mean, Sum, Product, Max, CountSelect };
const char* to_string(Combine c);
Combine combine_from_string(const std::string& s);

struct FlmNodeSpec {
  // Indices into FlmSpec::factors, ascending. Empty for the unigram node.
  std::vector<int> factors;
  Smoothing smoothing = Smoothing::WittenBell;
  std::int64_t tau = 0;
  Combine combine = Combine::Mean;
};

// The backoff graph: nodes are subsets of the conditioning factor set, every
// edge drops exactly one factor, the root is the full set and some path must
// reach the empty (unigram) context.
struct FlmSpec {
  std::vector<FactorRef> factors;       // canonical age order, oldest first
  std::vector<FlmNodeSpec> nodes;       // nodes[0] is the root
  std::vector<std::vector<int>> children;  // per node, child node indices

  // Full backoff lattice over `factors` with uniform node options.
  static FlmSpec lattice(std::vector<FactorRef> factors,
                         Smoothing smoothing = Smoothing::WittenBell,
                         std::int64_t tau = 0, Combine combine = Combine::Mean);

  // Built-in presets (currently "best-seame").
  static FlmSpec preset(const std::string& name);

  void validate() const;  // throws InvalidArgument / ParseError
  int node_index(const std::vector<int>& factor_subset) const;  // -1 if absent

  std::string to_text() const;
  static FlmSpec parse(const std::string& text);
  static FlmSpec parse_file(const std::string& path);
};

// Factored language model with generalized backoff. Counting fills one trie
// per graph node; scoring walks the graph: a context seen more than tau times
// yields a discounted estimate for its seen words and backs the rest off to
// the combined child distributions.
class FlmModel : public LanguageModel {
 public:
  static FlmModel train(const Corpus& corpus, Split split, const FlmSpec& spec,
                        std::int64_t min_count = 1);

  const Vocabulary& vocab() const override { return vocab_; }
  std::string kind() const override { return "flm"; }
  double prob_at(const Utterance& utt, std::size_t pos, int word_id) const override;
  void save(std::ostream& out) const override;
  static FlmModel load(std::istream& in);

  const FlmSpec& spec() const { return spec_; }

  // A scoring context: one value id per conditioning factor, aligned with
  // spec().factors.
  using FactorContext = std::vector<int>;

  // Context for event position pos of an utterance (pos == tokens.size() is
  // the end-of-sentence event). Factors missing on a referenced token raise
  // an error naming the position and factor.
  FactorContext context_at(const Utterance& utt, std::size_t pos) const;

  double prob(const FactorContext& context, int word_id) const;

  // Value id for a factor's string value; unseen values get the reserved
  // out-of-dictionary id.
  int factor_value_id(int factor_index, const std::string& value) const;

  const CountTrie& node_counts(int node) const {
    return tries_.at(static_cast<std::size_t>(node));
  }

 private:
  FlmModel() = default;

  void finalize();
  double node_prob(int node, const FactorContext& context, int word_id) const;
  double combined_children(int node, const FactorContext& context, int word_id) const;
  double child_normalizer(int node, const FactorContext& context) const;
  double discounted(int node, std::int64_t c, const CountTrie::Node& n) const;
  double reserved_mass(int node, const CountTrie::Node& n) const;
  std::vector<int> project(int node, const FactorContext& context) const;
  int num_prediction_ids() const { return vocab_.size() - 1; }

  FlmSpec spec_;
  Vocabulary vocab_;
  std::int64_t min_count_ = 1;
  // Per non-word factor kind: value -> id. Word factors use the vocabulary.
  std::map<FactorKind, std::map<std::string, int>> factor_dicts_;
  std::vector<CountTrie> tries_;  // one per node
  std::vector<double> discount1_, discount2_, discount3_;  // per node (KN)
  double unigram_rescale_ = 1.0;
  int unigram_node_ = -1;

  // Lazy normalizers for sum/product/max combination on unseen contexts.
  struct ZCache {
    std::mutex mutex;
    std::map<std::pair<int, FactorContext>, double> values;
  };
  std::unique_ptr<ZCache> z_cache_ = std::make_unique<ZCache>();
};

}  // namespace csflm

#endif  // CSFLM_FLM_HPP
