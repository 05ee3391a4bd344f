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

#include "csflm/lm.hpp"

#include <cmath>
#include <functional>
#include <ostream>
#include <sstream>

#include "csflm/error.hpp"

namespace csflm {

std::vector<double> LanguageModel::event_probs(const Utterance& utt) const {
  std::vector<double> probs;
  probs.reserve(utt.tokens.size() + 1);
  const Vocabulary& v = vocab();
  for (std::size_t pos = 0; pos < utt.tokens.size(); ++pos) {
    probs.push_back(prob_at(utt, pos, v.id_of(utt.tokens[pos].word)));
  }
  probs.push_back(prob_at(utt, utt.tokens.size(), Vocabulary::kSentEndId));
  return probs;
}

PplReport perplexity(const LanguageModel& model, const Corpus& corpus,
                     Split split, const std::string& model_name) {
  PplReport report;
  report.model = model_name;
  report.split = to_string(split);
  const Vocabulary& v = model.vocab();
  bool any = false;
  for (std::size_t i = 0; i < corpus.utterances.size(); ++i) {
    if (corpus.split_of[i] != split) continue;
    any = true;
    const Utterance& utt = corpus.utterances[i];
    std::vector<double> probs = model.event_probs(utt);
    for (std::size_t pos = 0; pos < probs.size(); ++pos) {
      if (!(probs[pos] > 0.0)) {
        throw Error("zero probability at event " + std::to_string(pos) +
                    " of an utterance; models must be smoothed");
      }
      report.log2_sum += std::log2(probs[pos]);
    }
    report.tokens += static_cast<std::int64_t>(utt.tokens.size());
    report.events += static_cast<std::int64_t>(probs.size());
    for (const auto& tok : utt.tokens) {
      if (!v.contains(tok.word)) ++report.oov_events;
    }
  }
  if (!any) throw InvalidArgument("perplexity: empty split");
  report.ppl =
      std::exp2(-report.log2_sum / static_cast<double>(report.events));
  return report;
}

std::string ppl_report_json(const PplReport& report) {
  std::ostringstream out;
  out.precision(17);
  out << "{\"model\": \"" << report.model << "\", \"split\": \"" << report.split
      << "\", \"tokens\": " << report.tokens
      << ", \"oov_events\": " << report.oov_events
      << ", \"events\": " << report.events << ", \"ppl\": " << report.ppl
      << "}";
  return out.str();
}

namespace {

void check_same_vocab(const std::vector<std::shared_ptr<const LanguageModel>>& models) {
  if (models.empty()) throw InvalidArgument("interpolation needs components");
  const Vocabulary& first = models.front()->vocab();
  for (const auto& m : models) {
    const Vocabulary& v = m->vocab();
    if (v.size() != first.size()) {
      throw InvalidArgument("interpolated components must share a vocabulary");
    }
    for (int id = 0; id < v.size(); ++id) {
      if (v.word_of(id) != first.word_of(id)) {
        throw InvalidArgument("interpolated components must share a vocabulary");
      }
    }
  }
}

}  // namespace

InterpolatedModel::InterpolatedModel(
    std::vector<std::shared_ptr<const LanguageModel>> models,
    std::vector<double> weights)
    : models_(std::move(models)), weights_(std::move(weights)) {
  check_same_vocab(models_);
  if (weights_.size() != models_.size()) {
    throw InvalidArgument("one weight per component required");
  }
  double total = 0.0;
  for (double w : weights_) {
    if (w < 0.0 || w > 1.0) throw InvalidArgument("weights must lie in [0,1]");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw InvalidArgument("weights must sum to 1");
  }
}

const Vocabulary& InterpolatedModel::vocab() const {
  return models_.front()->vocab();
}

double InterpolatedModel::prob_at(const Utterance& utt, std::size_t pos,
                                  int word_id) const {
  double p = 0.0;
  for (std::size_t i = 0; i < models_.size(); ++i) {
    p += weights_[i] * models_[i]->prob_at(utt, pos, word_id);
  }
  return p;
}

void InterpolatedModel::save(std::ostream& out) const {
  out << "csflm-model 1\n";
  out << "kind interpolated\n";
  out << "components " << models_.size() << '\n';
  out.precision(17);
  out << "weights";
  for (double w : weights_) out << ' ' << w;
  out << '\n';
  for (const auto& m : models_) {
    std::ostringstream buf;
    m->save(buf);
    std::string text = buf.str();
    std::int64_t lines = 0;
    for (char c : text) lines += c == '\n';
    out << "component " << lines << '\n' << text;
  }
}

std::shared_ptr<InterpolatedModel> interpolate(
    std::vector<std::shared_ptr<const LanguageModel>> models,
    std::vector<double> weights) {
  return std::make_shared<InterpolatedModel>(std::move(models), std::move(weights));
}

std::vector<double> tune_weights(
    const std::vector<std::shared_ptr<const LanguageModel>>& models,
    const Corpus& corpus, Split split, double step) {
  if (models.size() < 2) throw InvalidArgument("tune_weights needs >= 2 models");
  if (step <= 0.0 || step > 1.0) throw InvalidArgument("bad grid step");
  int cells = static_cast<int>(std::lround(1.0 / step));
  if (cells < 1 || std::abs(step * cells - 1.0) > 1e-9) {
    throw InvalidArgument("grid step must divide 1 evenly");
  }
  check_same_vocab(models);

  // Per-event component probabilities computed once over the dev split.
  std::vector<std::vector<double>> probs(models.size());
  bool any = false;
  for (std::size_t i = 0; i < corpus.utterances.size(); ++i) {
    if (corpus.split_of[i] != split) continue;
    any = true;
    for (std::size_t m = 0; m < models.size(); ++m) {
      std::vector<double> ev = models[m]->event_probs(corpus.utterances[i]);
      probs[m].insert(probs[m].end(), ev.begin(), ev.end());
    }
  }
  if (!any) throw InvalidArgument("tune_weights: empty dev split");

  const std::size_t events = probs[0].size();
  std::vector<double> best_weights;
  double best_log2 = -1e300;  // maximize sum of log2 P
  std::vector<int> alloc(models.size(), 0);

  // Enumerates integer compositions of `cells` over the components,
  // first weight ascending so that ties keep the smaller first weight.
  auto evaluate = [&](const std::vector<int>& a) {
    std::vector<double> w(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      w[i] = static_cast<double>(a[i]) / static_cast<double>(cells);
    }
    double log2_sum = 0.0;
    for (std::size_t e = 0; e < events; ++e) {
      double p = 0.0;
      for (std::size_t m = 0; m < models.size(); ++m) p += w[m] * probs[m][e];
      if (!(p > 0.0)) return;  // degenerate corner (a component with zeros)
      log2_sum += std::log2(p);
    }
    if (log2_sum > best_log2) {
      best_log2 = log2_sum;
      best_weights = w;
    }
  };
  std::function<void(std::size_t, int)> walk = [&](std::size_t idx, int left) {
    if (idx + 1 == alloc.size()) {
      alloc[idx] = left;
      evaluate(alloc);
      return;
    }
    for (int a = 0; a <= left; ++a) {
      alloc[idx] = a;
      walk(idx + 1, left - a);
    }
  };
  walk(0, cells);
  if (best_weights.empty()) throw Error("tune_weights: no valid grid point");
  return best_weights;
}

}  // namespace csflm
