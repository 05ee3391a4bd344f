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

#ifndef CSFLM_NGRAM_HPP
#define CSFLM_NGRAM_HPP

#include <iosfwd>
#include <span>

#include "csflm/count_trie.hpp"
#include "csflm/lm.hpp"

namespace csflm {

// Backoff n-gram model over words. Utterances are padded with n-1 virtual
// sentence-begin symbols and predict an end-of-sentence event. Smoothing is
// backoff-style: seen events keep a discounted estimate, the reserved mass
// goes to unseen words in proportion to the next shorter context's
// distribution.
class NgramModel : public LanguageModel {
 public:
  static NgramModel train(const Corpus& corpus, Split split, int order,
                          Smoothing smoothing, std::int64_t min_count = 1,
                          std::int64_t backoff_threshold = 0);

  const Vocabulary& vocab() const override { return vocab_; }
  std::string kind() const override { return "ngram"; }
  double prob_at(const Utterance& utt, std::size_t pos, int word_id) const override;
  void save(std::ostream& out) const override;
  static NgramModel load(std::istream& in);

  // P(word | context); the context must hold exactly order-1 word ids
  // (oldest first).
  double prob(std::span<const int> context, int word) const;
  double prob(std::initializer_list<int> context, int word) const {
    return prob(std::span<const int>(context.begin(), context.size()), word);
  }

  int order() const { return order_; }
  Smoothing smoothing() const { return smoothing_; }
  std::int64_t backoff_threshold() const { return tau_; }
  const CountTrie& counts(int context_length) const {
    return tries_.at(static_cast<std::size_t>(context_length));
  }

 private:
  NgramModel(int order, Smoothing smoothing, std::int64_t tau)
      : order_(order), smoothing_(smoothing), tau_(tau) {}

  void finalize();  // discounts + backoff weights, bottom-up
  double prob_level(int k, std::span<const int> context, int word) const;
  double discounted(int level, std::int64_t c, const CountTrie::Node& node) const;
  double reserved_mass(int level, const CountTrie::Node& node) const;
  int num_prediction_ids() const { return vocab_.size() - 1; }  // all but <s>

  int order_;
  Smoothing smoothing_;
  std::int64_t tau_;
  std::int64_t min_count_ = 1;
  Vocabulary vocab_;
  std::vector<CountTrie> tries_;          // index = context length
  std::vector<double> discount1_, discount2_, discount3_;  // per level, KN
  double unigram_rescale_ = 1.0;  // only != 1 when every id is seen
};

}  // namespace csflm

#endif  // CSFLM_NGRAM_HPP
