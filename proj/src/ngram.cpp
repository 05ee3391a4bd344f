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

#include "csflm/ngram.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "csflm/corpus.hpp"
#include "csflm/error.hpp"

namespace csflm {

const char* to_string(Smoothing s) {
  switch (s) {
    case Smoothing::WittenBell:
      return "witten-bell";
    case Smoothing::KneserNeyMod:
      return "kneser-ney-mod";
    case Smoothing::MaxLikelihood:
      return "ml";
  }
  return "witten-bell";
}

Smoothing smoothing_from_string(const std::string& s) {
  if (s == "witten-bell") return Smoothing::WittenBell;
  if (s == "kneser-ney-mod") return Smoothing::KneserNeyMod;
  if (s == "ml") return Smoothing::MaxLikelihood;
  throw InvalidArgument("unknown smoothing '" + s + "'");
}

NgramModel NgramModel::train(const Corpus& corpus, Split split, int order,
                             Smoothing smoothing, std::int64_t min_count,
                             std::int64_t backoff_threshold) {
  if (order < 1) throw InvalidArgument("n-gram order must be >= 1");
  if (backoff_threshold < 0) throw InvalidArgument("backoff threshold must be >= 0");
  auto indices = corpus.split_indices(split);
  if (indices.empty()) {
    throw InvalidArgument("train_ngram: empty training split");
  }
  NgramModel model(order, smoothing, backoff_threshold);
  model.min_count_ = min_count;
  {
    Corpus train_only;
    for (std::size_t i : indices) {
      train_only.add(corpus.utterances[i], Split::Train);
    }
    model.vocab_ = build_vocabulary(train_only, min_count);
  }
  for (int k = 0; k < order; ++k) model.tries_.emplace_back(k);

  for (std::size_t i : indices) {
    const auto& tokens = corpus.utterances[i].tokens;
    std::vector<int> ids(static_cast<std::size_t>(order - 1), Vocabulary::kSentBeginId);
    for (const auto& tok : tokens) ids.push_back(model.vocab_.id_of(tok.word));
    ids.push_back(Vocabulary::kSentEndId);
    for (std::size_t pos = static_cast<std::size_t>(order - 1); pos < ids.size();
         ++pos) {
      for (int k = 0; k < order; ++k) {
        std::span<const int> ctx(ids.data() + pos - static_cast<std::size_t>(k),
                                 static_cast<std::size_t>(k));
        model.tries_[static_cast<std::size_t>(k)].add(ctx, ids[pos]);
      }
    }
  }
  model.finalize();
  return model;
}

namespace {

// Modified Kneser-Ney discounts from count-of-counts, clamped so that every
// discounted count stays strictly positive.
void kn_discounts(const std::vector<std::int64_t>& n, double& d1, double& d2,
                  double& d3) {
  d1 = 0.5;
  d2 = 1.0;
  d3 = 1.5;
  if (n[1] > 0 && n[1] + 2 * n[2] > 0) {
    double y = static_cast<double>(n[1]) / static_cast<double>(n[1] + 2 * n[2]);
    if (n[2] > 0) d1 = 1.0 - 2.0 * y * static_cast<double>(n[2]) / static_cast<double>(n[1]);
    if (n[2] > 0 && n[3] > 0) {
      d2 = 2.0 - 3.0 * y * static_cast<double>(n[3]) / static_cast<double>(n[2]);
    }
    if (n[3] > 0 && n[4] > 0) {
      d3 = 3.0 - 4.0 * y * static_cast<double>(n[4]) / static_cast<double>(n[3]);
    }
  }
  d1 = std::clamp(d1, 1e-4, 0.9999);
  d2 = std::clamp(d2, 1e-4, 1.9999);
  d3 = std::clamp(d3, 1e-4, 2.9999);
}

}  // namespace

double NgramModel::discounted(int level, std::int64_t c,
                              const CountTrie::Node& node) const {
  double cnt = static_cast<double>(node.total);
  switch (smoothing_) {
    case Smoothing::WittenBell:
      return static_cast<double>(c) /
             (cnt + static_cast<double>(node.successors.size()));
    case Smoothing::KneserNeyMod: {
      std::size_t l = static_cast<std::size_t>(level);
      double d = c == 1 ? discount1_[l] : c == 2 ? discount2_[l] : discount3_[l];
      return (static_cast<double>(c) - d) / cnt;
    }
    case Smoothing::MaxLikelihood:
      return static_cast<double>(c) / cnt;
  }
  return 0.0;
}

double NgramModel::reserved_mass(int level, const CountTrie::Node& node) const {
  double cnt = static_cast<double>(node.total);
  switch (smoothing_) {
    case Smoothing::WittenBell:
      return static_cast<double>(node.successors.size()) /
             (cnt + static_cast<double>(node.successors.size()));
    case Smoothing::KneserNeyMod: {
      std::size_t l = static_cast<std::size_t>(level);
      std::int64_t n1 = 0, n2 = 0, n3p = 0;
      for (const auto& [_, c] : node.successors) {
        if (c == 1) ++n1;
        else if (c == 2) ++n2;
        else ++n3p;
      }
      return (discount1_[l] * static_cast<double>(n1) +
              discount2_[l] * static_cast<double>(n2) +
              discount3_[l] * static_cast<double>(n3p)) /
             cnt;
    }
    case Smoothing::MaxLikelihood:
      return 0.0;
  }
  return 0.0;
}

void NgramModel::finalize() {
  discount1_.assign(static_cast<std::size_t>(order_), 0.0);
  discount2_.assign(static_cast<std::size_t>(order_), 0.0);
  discount3_.assign(static_cast<std::size_t>(order_), 0.0);
  if (smoothing_ == Smoothing::KneserNeyMod) {
    for (int k = 0; k < order_; ++k) {
      auto coc = tries_[static_cast<std::size_t>(k)].count_of_counts(4);
      kn_discounts(coc, discount1_[static_cast<std::size_t>(k)],
                   discount2_[static_cast<std::size_t>(k)],
                   discount3_[static_cast<std::size_t>(k)]);
    }
  }
  // Unigram: if every prediction id is seen, the reserved mass has nowhere
  // to go and the seen estimates are rescaled to fill the distribution.
  CountTrie::Node* root = tries_[0].find_mutable({});
  if (!root) throw Error("n-gram training produced no events");
  int unseen = num_prediction_ids() - static_cast<int>(root->successors.size());
  unigram_rescale_ = 1.0;
  if (unseen == 0) {
    double seen_mass = 0.0;
    for (const auto& [w, c] : root->successors) seen_mass += discounted(0, c, *root);
    unigram_rescale_ = 1.0 / seen_mass;
    root->alpha = 0.0;
  } else {
    root->alpha = reserved_mass(0, *root) * static_cast<double>(num_prediction_ids()) /
                  static_cast<double>(unseen);
  }
  // Higher levels, bottom-up: each seen context's backoff weight scales the
  // shorter context's distribution over this context's unseen words.
  for (int k = 1; k < order_; ++k) {
    tries_[static_cast<std::size_t>(k)].for_each_mutable(
        [this, k](const std::vector<int>& ctx, CountTrie::Node& node) {
          double seen_lower = 0.0;
          std::span<const int> shorter(ctx.data() + 1, ctx.size() - 1);
          for (const auto& [w, _] : node.successors) {
            seen_lower += prob_level(k - 1, shorter, w);
          }
          double denom = std::max(1.0 - seen_lower, 1e-300);
          node.alpha = reserved_mass(k, node) / denom;
        });
  }
}

double NgramModel::prob_level(int k, std::span<const int> context, int word) const {
  const CountTrie::Node* node =
      tries_[static_cast<std::size_t>(k)].find(context);
  if (k == 0) {
    // Unigram with a uniform base over the prediction ids.
    auto it = node->successors.find(word);
    if (it != node->successors.end()) {
      return discounted(0, it->second, *node) * unigram_rescale_;
    }
    return node->alpha / static_cast<double>(num_prediction_ids());
  }
  std::span<const int> shorter(context.data() + 1, context.size() - 1);
  if (!node || node->total <= tau_) return prob_level(k - 1, shorter, word);
  auto it = node->successors.find(word);
  if (it != node->successors.end()) return discounted(k, it->second, *node);
  return node->alpha * prob_level(k - 1, shorter, word);
}

double NgramModel::prob(std::span<const int> context, int word) const {
  if (static_cast<int>(context.size()) != order_ - 1) {
    throw InvalidArgument("n-gram context must hold order-1 ids");
  }
  return prob_level(order_ - 1, context, word);
}

double NgramModel::prob_at(const Utterance& utt, std::size_t pos,
                           int word_id) const {
  std::vector<int> context(static_cast<std::size_t>(order_ - 1));
  for (int k = 1; k < order_; ++k) {
    // Context slot order-1-k holds the word k positions back.
    std::int64_t idx = static_cast<std::int64_t>(pos) - k;
    context[static_cast<std::size_t>(order_ - 1 - k)] =
        idx >= 0 ? vocab_.id_of(utt.tokens[static_cast<std::size_t>(idx)].word)
                 : Vocabulary::kSentBeginId;
  }
  return prob(context, word_id);
}

void NgramModel::save(std::ostream& out) const {
  out << "csflm-model 1\n";
  out << "kind ngram\n";
  out << "order " << order_ << '\n';
  out << "smoothing " << to_string(smoothing_) << '\n';
  out << "tau " << tau_ << '\n';
  out << "min_count " << min_count_ << '\n';
  out << "vocab " << vocab_.num_known_words() << '\n';
  for (int id = Vocabulary::kFirstWordId; id < vocab_.size(); ++id) {
    out << vocab_.word_of(id) << ' ' << vocab_.count_of(id) << '\n';
  }
  // Only the highest-order counts are stored; lower levels are projections
  // and are rebuilt on load.
  std::int64_t lines = 0;
  tries_.back().for_each_sorted(
      [&lines](const std::vector<int>&, const CountTrie::Node& node) {
        lines += static_cast<std::int64_t>(node.successors.size());
      });
  out << "counts " << lines << '\n';
  tries_.back().for_each_sorted(
      [&out](const std::vector<int>& ctx, const CountTrie::Node& node) {
        for (const auto& [w, c] : node.successors) {
          for (int v : ctx) out << v << ' ';
          out << w << ' ' << c << '\n';
        }
      });
}

NgramModel NgramModel::load(std::istream& in) {
  std::string line;
  auto next_line = [&in, &line](const std::string& what) {
    if (!std::getline(in, line)) throw ParseError("model file: missing " + what);
    return line;
  };
  if (next_line("header") != "csflm-model 1") {
    throw ParseError("model file: bad header");
  }
  if (next_line("kind") != "kind ngram") throw ParseError("model file: not an n-gram model");
  auto field = [&next_line](const std::string& key) {
    std::string l = next_line(key);
    if (l.rfind(key + " ", 0) != 0) throw ParseError("model file: expected " + key);
    return l.substr(key.size() + 1);
  };
  int order = std::stoi(field("order"));
  Smoothing smoothing = smoothing_from_string(field("smoothing"));
  std::int64_t tau = std::stoll(field("tau"));
  std::int64_t min_count = std::stoll(field("min_count"));
  NgramModel model(order, smoothing, tau);
  model.min_count_ = min_count;
  std::int64_t vocab_size = std::stoll(field("vocab"));
  for (std::int64_t i = 0; i < vocab_size; ++i) {
    std::istringstream row(next_line("vocab entry"));
    std::string word;
    std::int64_t count;
    if (!(row >> word >> count)) throw ParseError("model file: bad vocab entry");
    model.vocab_.add_word(word, count);
  }
  for (int k = 0; k < order; ++k) model.tries_.emplace_back(k);
  std::int64_t lines = std::stoll(field("counts"));
  std::vector<int> ids(static_cast<std::size_t>(order));
  for (std::int64_t i = 0; i < lines; ++i) {
    std::istringstream row(next_line("count entry"));
    for (auto& v : ids) {
      if (!(row >> v)) throw ParseError("model file: bad count entry");
    }
    std::int64_t c;
    if (!(row >> c)) throw ParseError("model file: bad count entry");
    // Rebuild every projection level from the longest context.
    for (int k = 0; k < order; ++k) {
      std::span<const int> ctx(ids.data() + (order - 1 - k), static_cast<std::size_t>(k));
      model.tries_[static_cast<std::size_t>(k)].add(ctx, ids.back(), c);
    }
  }
  model.finalize();
  return model;
}

}  // namespace csflm
