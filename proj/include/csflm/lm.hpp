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

#ifndef CSFLM_LM_HPP
#define CSFLM_LM_HPP

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "csflm/types.hpp"

namespace csflm {

enum class Smoothing { WittenBell, KneserNeyMod, MaxLikelihood };

const char* to_string(Smoothing s);
Smoothing smoothing_from_string(const std::string& s);

// Common surface of the n-gram, factored and interpolated models. Each
// utterance contributes one event per token plus an end-of-sentence event;
// sentence-begin symbols are virtual context and never predicted.
class LanguageModel {
 public:
  virtual ~LanguageModel() = default;

  virtual const Vocabulary& vocab() const = 0;
  virtual std::string kind() const = 0;

  // P(word_id | context at event position pos). pos ranges over
  // 0..tokens.size(); pos == tokens.size() is the end-of-sentence event.
  // word_id may be any prediction-vocabulary id (everything except <s>).
  virtual double prob_at(const Utterance& utt, std::size_t pos,
                         int word_id) const = 0;

  // Probabilities of the actual events of the utterance (each token, then
  // </s>), in order.
  std::vector<double> event_probs(const Utterance& utt) const;

  virtual void save(std::ostream& out) const = 0;
};

struct PplReport {
  std::string model;
  std::string split;
  std::int64_t tokens = 0;      // word tokens scored (excludes </s> events)
  std::int64_t oov_events = 0;  // tokens scored through <unk>
  std::int64_t events = 0;      // tokens + one </s> per utterance
  double log2_sum = 0.0;
  double ppl = 1.0;
};

// PPL = 2^(-(1/N) * sum log2 P) with N = tokens + one </s> per utterance.
// OOV tokens are scored through <unk> and counted in N. Throws when the
// split is empty or any event has zero probability.
PplReport perplexity(const LanguageModel& model, const Corpus& corpus,
                     Split split, const std::string& model_name);

std::string ppl_report_json(const PplReport& report);

// Pointwise mixture P = sum_i w_i P_i over models sharing one vocabulary.
class InterpolatedModel : public LanguageModel {
 public:
  InterpolatedModel(std::vector<std::shared_ptr<const LanguageModel>> models,
                    std::vector<double> weights);

  const Vocabulary& vocab() const override;
  std::string kind() const override { return "interpolated"; }
  double prob_at(const Utterance& utt, std::size_t pos, int word_id) const override;
  void save(std::ostream& out) const override;

  const std::vector<double>& weights() const { return weights_; }
  const std::vector<std::shared_ptr<const LanguageModel>>& components() const {
    return models_;
  }

 private:
  std::vector<std::shared_ptr<const LanguageModel>> models_;
  std::vector<double> weights_;
};

std::shared_ptr<InterpolatedModel> interpolate(
    std::vector<std::shared_ptr<const LanguageModel>> models,
    std::vector<double> weights);

// Grid search over the weight simplex (resolution `step`, which must divide 1
// into an integer number of cells) minimizing dev PPL; ties go to the smaller
// first weight. Requires a non-empty dev split.
std::vector<double> tune_weights(
    const std::vector<std::shared_ptr<const LanguageModel>>& models,
    const Corpus& corpus, Split split, double step = 0.01);

}  // namespace csflm

#endif  // CSFLM_LM_HPP
