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

#include "csflm/rnnlm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "csflm/error.hpp"
#include "csflm/rng.hpp"
#include "csflm/types.hpp"

namespace csflm {

TextLines read_text_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open text '" + path + "'");
  TextLines lines;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::vector<std::string> tokens;
    std::string tok;
    while (row >> tok) tokens.push_back(tok);
    if (!tokens.empty()) lines.push_back(std::move(tokens));
  }
  return lines;
}

void write_text_lines(const TextLines& lines, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write text '" + path + "'");
  for (const auto& line : lines) {
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (i) out << ' ';
      out << line[i];
    }
    out << '\n';
  }
}

void EmbeddingMatrix::check() const {
  for (const auto& [word, vec] : vectors) {
    if (static_cast<int>(vec.size()) != dim) {
      throw InvalidArgument("embedding for '" + word + "' has wrong dimension");
    }
    for (double v : vec) {
      if (!std::isfinite(v)) {
        throw InvalidArgument("embedding for '" + word + "' has non-finite entries");
      }
    }
  }
}

EmbeddingMatrix load_embeddings(std::istream& in, const std::string& name) {
  EmbeddingMatrix m;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string word;
    row >> word;
    std::vector<double> vec;
    std::string field;
    while (row >> field) {
      try {
        std::size_t used = 0;
        vec.push_back(std::stod(field, &used));
        if (used != field.size()) throw std::invalid_argument(field);
      } catch (const std::exception&) {
        throw ParseError("embeddings '" + name + "': non-numeric entry '" + field + "'",
                         line_no);
      }
    }
    if (vec.empty()) throw ParseError("embeddings '" + name + "': empty row", line_no);
    if (m.dim == 0) m.dim = static_cast<int>(vec.size());
    if (static_cast<int>(vec.size()) != m.dim) {
      throw ParseError("embeddings '" + name + "': ragged row (expected " +
                           std::to_string(m.dim) + " values)",
                       line_no);
    }
    m.vectors[word] = std::move(vec);
  }
  return m;
}

EmbeddingMatrix load_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open embeddings '" + path + "'");
  return load_embeddings(in, path);
}

void save_embeddings(const EmbeddingMatrix& matrix, std::ostream& out) {
  out.precision(17);
  for (const auto& [word, vec] : matrix.vectors) {
    out << word;
    for (double v : vec) out << ' ' << v;
    out << '\n';
  }
}

void save_embeddings(const EmbeddingMatrix& matrix, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write embeddings '" + path + "'");
  save_embeddings(matrix, out);
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void softmax(std::vector<double>& logits) {
  double max = -1e300;
  for (double v : logits) max = std::max(max, v);
  double sum = 0.0;
  for (double& v : logits) {
    v = std::exp(v - max);
    sum += v;
  }
  for (double& v : logits) v /= sum;
}

}  // namespace

int RnnLm::word_id(const std::string& word) const {
  auto it = word_to_id_.find(word);
  if (it != word_to_id_.end()) return it->second;
  return word_to_id_.at(kUnkWord);
}

std::vector<int> RnnLm::line_ids(const std::vector<std::string>& line) const {
  // The end-of-line symbol doubles as the start-of-line input, so every
  // token of the line is a predicted event, plus the closing </s>.
  std::vector<int> ids;
  ids.reserve(line.size() + 2);
  ids.push_back(word_to_id_.at(kSentEnd));
  for (const auto& w : line) ids.push_back(word_id(w));
  ids.push_back(word_to_id_.at(kSentEnd));
  return ids;
}

std::vector<std::vector<double>> RnnLm::forward_distributions(
    const std::vector<std::string>& line) const {
  std::vector<int> ids = line_ids(line);
  const std::size_t steps = ids.size() - 1;
  const int vocab = vocab_size();
  std::vector<double> h(static_cast<std::size_t>(hidden_), 0.0);
  std::vector<std::vector<double>> out;
  out.reserve(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    std::vector<double> nh(static_cast<std::size_t>(hidden_));
    const auto& row = u_[static_cast<std::size_t>(ids[t])];
    for (int j = 0; j < hidden_; ++j) {
      double acc = row[static_cast<std::size_t>(j)];
      for (int k = 0; k < hidden_; ++k) {
        acc += w_[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)] *
               h[static_cast<std::size_t>(k)];
      }
      nh[static_cast<std::size_t>(j)] = sigmoid(acc);
    }
    h = std::move(nh);
    std::vector<double> logits(static_cast<std::size_t>(vocab), 0.0);
    for (int k = 0; k < hidden_; ++k) {
      double hk = h[static_cast<std::size_t>(k)];
      const auto& vrow = v_[static_cast<std::size_t>(k)];
      for (int o = 0; o < vocab; ++o) {
        logits[static_cast<std::size_t>(o)] += hk * vrow[static_cast<std::size_t>(o)];
      }
    }
    softmax(logits);
    out.push_back(std::move(logits));
  }
  return out;
}

double RnnLm::line_log2prob(const std::vector<std::string>& line) const {
  std::vector<int> ids = line_ids(line);
  auto dists = forward_distributions(line);
  double log2_sum = 0.0;
  for (std::size_t t = 0; t < dists.size(); ++t) {
    log2_sum += std::log2(dists[t][static_cast<std::size_t>(ids[t + 1])]);
  }
  return log2_sum;
}

double RnnLm::perplexity(const TextLines& text) const {
  if (text.empty()) throw InvalidArgument("rnnlm perplexity: empty text");
  double log2_sum = 0.0;
  std::int64_t events = 0;
  for (const auto& line : text) {
    log2_sum += line_log2prob(line);
    events += static_cast<std::int64_t>(line.size()) + 1;
  }
  return std::exp2(-log2_sum / static_cast<double>(events));
}

RnnLm::Gradients RnnLm::line_gradients(const std::vector<std::string>& line,
                                       int bptt_steps) const {
  if (bptt_steps < 1) throw InvalidArgument("bptt_steps must be >= 1");
  std::vector<int> ids = line_ids(line);
  const std::size_t steps = ids.size() - 1;
  const int vocab = vocab_size();

  Gradients g;
  g.input_hidden.assign(static_cast<std::size_t>(vocab),
                        std::vector<double>(static_cast<std::size_t>(hidden_), 0.0));
  g.hidden_hidden.assign(static_cast<std::size_t>(hidden_),
                         std::vector<double>(static_cast<std::size_t>(hidden_), 0.0));
  g.hidden_output.assign(static_cast<std::size_t>(hidden_),
                         std::vector<double>(static_cast<std::size_t>(vocab), 0.0));

  // Forward pass, keeping every hidden state (hs[0] is the reset state).
  std::vector<std::vector<double>> hs(steps + 1,
                                      std::vector<double>(static_cast<std::size_t>(hidden_), 0.0));
  std::vector<std::vector<double>> dists(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    const auto& row = u_[static_cast<std::size_t>(ids[t])];
    for (int j = 0; j < hidden_; ++j) {
      double acc = row[static_cast<std::size_t>(j)];
      for (int k = 0; k < hidden_; ++k) {
        acc += w_[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)] *
               hs[t][static_cast<std::size_t>(k)];
      }
      hs[t + 1][static_cast<std::size_t>(j)] = sigmoid(acc);
    }
    std::vector<double> logits(static_cast<std::size_t>(vocab), 0.0);
    for (int k = 0; k < hidden_; ++k) {
      double hk = hs[t + 1][static_cast<std::size_t>(k)];
      const auto& vrow = v_[static_cast<std::size_t>(k)];
      for (int o = 0; o < vocab; ++o) {
        logits[static_cast<std::size_t>(o)] += hk * vrow[static_cast<std::size_t>(o)];
      }
    }
    softmax(logits);
    g.loss -= std::log(logits[static_cast<std::size_t>(ids[t + 1])]);
    dists[t] = std::move(logits);
  }

  // Backward pass: each step's output error is propagated through the
  // recurrence for at most bptt_steps.
  for (std::size_t t = 0; t < steps; ++t) {
    // d loss_t / d logits = y - onehot(target)
    std::vector<double> dlogits = dists[t];
    dlogits[static_cast<std::size_t>(ids[t + 1])] -= 1.0;
    std::vector<double> dh(static_cast<std::size_t>(hidden_), 0.0);
    for (int k = 0; k < hidden_; ++k) {
      double hk = hs[t + 1][static_cast<std::size_t>(k)];
      auto& gvrow = g.hidden_output[static_cast<std::size_t>(k)];
      const auto& vrow = v_[static_cast<std::size_t>(k)];
      double acc = 0.0;
      for (int o = 0; o < vocab; ++o) {
        gvrow[static_cast<std::size_t>(o)] += dlogits[static_cast<std::size_t>(o)] * hk;
        acc += vrow[static_cast<std::size_t>(o)] * dlogits[static_cast<std::size_t>(o)];
      }
      dh[static_cast<std::size_t>(k)] = acc;
    }
    // Unroll back through time.
    std::size_t back = t + 1;
    for (int step = 0; step < bptt_steps && back >= 1; ++step, --back) {
      // dh is w.r.t. hs[back]; convert to pre-activation.
      std::vector<double> dz(static_cast<std::size_t>(hidden_));
      for (int j = 0; j < hidden_; ++j) {
        double hj = hs[back][static_cast<std::size_t>(j)];
        dz[static_cast<std::size_t>(j)] = dh[static_cast<std::size_t>(j)] * hj * (1.0 - hj);
      }
      auto& gurow = g.input_hidden[static_cast<std::size_t>(ids[back - 1])];
      for (int j = 0; j < hidden_; ++j) {
        gurow[static_cast<std::size_t>(j)] += dz[static_cast<std::size_t>(j)];
      }
      for (int k = 0; k < hidden_; ++k) {
        double hk = hs[back - 1][static_cast<std::size_t>(k)];
        auto& gwrow = g.hidden_hidden[static_cast<std::size_t>(k)];
        for (int j = 0; j < hidden_; ++j) {
          gwrow[static_cast<std::size_t>(j)] += dz[static_cast<std::size_t>(j)] * hk;
        }
      }
      if (back == 1 || step + 1 == bptt_steps) break;
      std::vector<double> prev(static_cast<std::size_t>(hidden_), 0.0);
      for (int k = 0; k < hidden_; ++k) {
        const auto& wrow = w_[static_cast<std::size_t>(k)];
        double acc = 0.0;
        for (int j = 0; j < hidden_; ++j) {
          acc += wrow[static_cast<std::size_t>(j)] * dz[static_cast<std::size_t>(j)];
        }
        prev[static_cast<std::size_t>(k)] = acc;
      }
      dh = std::move(prev);
    }
  }
  return g;
}

RnnLm RnnLm::train(const TextLines& text, const TrainConfig& config,
                   const TextLines* dev, TrainTrace* trace) {
  if (text.empty()) throw InvalidArgument("train_rnnlm: empty text");
  if (config.hidden <= 0) throw InvalidArgument("train_rnnlm: hidden size must be > 0");
  if (config.bptt_steps < 1) throw InvalidArgument("train_rnnlm: bptt_steps must be >= 1");

  RnnLm model;
  model.hidden_ = config.hidden;
  {
    std::map<std::string, std::int64_t> counts;
    for (const auto& line : text) {
      for (const auto& w : line) ++counts[w];
    }
    std::vector<std::pair<std::string, std::int64_t>> order(counts.begin(), counts.end());
    std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    model.words_.push_back(kSentEnd);
    model.words_.push_back(kUnkWord);
    for (const auto& [w, _] : order) model.words_.push_back(w);
    for (std::size_t i = 0; i < model.words_.size(); ++i) {
      model.word_to_id_[model.words_[i]] = static_cast<int>(i);
    }
  }
  const int vocab = model.vocab_size();
  Rng rng(config.seed);
  auto init_matrix = [&rng, &config](std::size_t rows, std::size_t cols) {
    std::vector<std::vector<double>> m(rows, std::vector<double>(cols, 0.0));
    for (auto& row : m) {
      for (double& v : row) {
        v = (rng.next_double() * 2.0 - 1.0) * config.init_scale;
      }
    }
    return m;
  };
  model.u_ = init_matrix(static_cast<std::size_t>(vocab),
                         static_cast<std::size_t>(config.hidden));
  model.w_ = init_matrix(static_cast<std::size_t>(config.hidden),
                         static_cast<std::size_t>(config.hidden));
  model.v_ = init_matrix(static_cast<std::size_t>(config.hidden),
                         static_cast<std::size_t>(vocab));

  double lr = config.learning_rate;
  double best = 1e300;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (const auto& line : text) {
      Gradients g = model.line_gradients(line, config.bptt_steps);
      for (int i = 0; i < vocab; ++i) {
        auto& row = model.u_[static_cast<std::size_t>(i)];
        const auto& grow = g.input_hidden[static_cast<std::size_t>(i)];
        for (int j = 0; j < config.hidden; ++j) {
          row[static_cast<std::size_t>(j)] -= lr * grow[static_cast<std::size_t>(j)];
        }
      }
      for (int k = 0; k < config.hidden; ++k) {
        auto& wrow = model.w_[static_cast<std::size_t>(k)];
        const auto& gwrow = g.hidden_hidden[static_cast<std::size_t>(k)];
        for (int j = 0; j < config.hidden; ++j) {
          wrow[static_cast<std::size_t>(j)] -= lr * gwrow[static_cast<std::size_t>(j)];
        }
        auto& vrow = model.v_[static_cast<std::size_t>(k)];
        const auto& gvrow = g.hidden_output[static_cast<std::size_t>(k)];
        for (int o = 0; o < vocab; ++o) {
          vrow[static_cast<std::size_t>(o)] -= lr * gvrow[static_cast<std::size_t>(o)];
        }
      }
    }
    double train_ppl = model.perplexity(text);
    double gate_ppl = dev ? model.perplexity(*dev) : train_ppl;
    if (trace) {
      trace->train_ppl.push_back(train_ppl);
      if (dev) trace->dev_ppl.push_back(gate_ppl);
      trace->learning_rate.push_back(lr);
    }
    if (gate_ppl > best * config.halving_threshold) lr /= 2.0;
    best = std::min(best, gate_ppl);
  }
  return model;
}

EmbeddingMatrix RnnLm::extract_embeddings(const std::set<std::string>& words) const {
  std::string offenders;
  for (const auto& w : words) {
    if (!word_to_id_.count(w)) {
      if (!offenders.empty()) offenders += ", ";
      offenders += w;
    }
  }
  if (!offenders.empty()) {
    throw InvalidArgument("words outside the model vocabulary: " + offenders);
  }
  EmbeddingMatrix m;
  m.dim = hidden_;
  for (const auto& w : words) {
    m.vectors[w] = u_[static_cast<std::size_t>(word_to_id_.at(w))];
  }
  return m;
}

EmbeddingMatrix RnnLm::extract_all_embeddings() const {
  std::set<std::string> words;
  for (const auto& w : words_) {
    if (w != kSentEnd && w != kUnkWord) words.insert(w);
  }
  return extract_embeddings(words);
}

void RnnLm::save(std::ostream& out) const {
  out << "csflm-rnnlm 1\n";
  out << "hidden " << hidden_ << '\n';
  out << "vocab " << vocab_size() << '\n';
  for (const auto& w : words_) out << w << '\n';
  out.precision(17);
  auto dump = [&out](const std::vector<std::vector<double>>& m, const char* name) {
    out << name << '\n';
    for (const auto& row : m) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out << ' ';
        out << row[i];
      }
      out << '\n';
    }
  };
  dump(u_, "input_hidden");
  dump(w_, "hidden_hidden");
  dump(v_, "hidden_output");
}

void RnnLm::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write model '" + path + "'");
  save(out);
}

RnnLm RnnLm::load(std::istream& in) {
  std::string line;
  auto next_line = [&in, &line](const std::string& what) {
    if (!std::getline(in, line)) throw ParseError("rnnlm file: missing " + what);
    return line;
  };
  if (next_line("header") != "csflm-rnnlm 1") throw ParseError("rnnlm file: bad header");
  RnnLm model;
  auto field = [&next_line](const std::string& key) {
    std::string l = next_line(key);
    if (l.rfind(key + " ", 0) != 0) throw ParseError("rnnlm file: expected " + key);
    return l.substr(key.size() + 1);
  };
  model.hidden_ = std::stoi(field("hidden"));
  int vocab = std::stoi(field("vocab"));
  for (int i = 0; i < vocab; ++i) {
    model.words_.push_back(next_line("vocab word"));
    model.word_to_id_[model.words_.back()] = i;
  }
  auto read_matrix = [&next_line](std::size_t rows, std::size_t cols, const char* name) {
    if (next_line(name) != name) throw ParseError(std::string("rnnlm file: expected ") + name);
    std::vector<std::vector<double>> m(rows, std::vector<double>(cols));
    for (auto& row : m) {
      std::istringstream rs(next_line("matrix row"));
      for (auto& v : row) {
        if (!(rs >> v)) throw ParseError("rnnlm file: short matrix row");
      }
    }
    return m;
  };
  model.u_ = read_matrix(static_cast<std::size_t>(vocab),
                         static_cast<std::size_t>(model.hidden_), "input_hidden");
  model.w_ = read_matrix(static_cast<std::size_t>(model.hidden_),
                         static_cast<std::size_t>(model.hidden_), "hidden_hidden");
  model.v_ = read_matrix(static_cast<std::size_t>(model.hidden_),
                         static_cast<std::size_t>(vocab), "hidden_output");
  return model;
}

RnnLm RnnLm::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model '" + path + "'");
  return load(in);
}

OcTrainingText build_oc_training_text(const TextLines& lines,
                                      const WordSet& vocabulary,
                                      const WordSet& function_words,
                                      double coverage_threshold) {
  OcTrainingText out;
  std::size_t kept = 0;
  for (const auto& line : lines) {
    std::vector<std::string> filtered;
    for (const auto& w : line) {
      if (!function_words.count(w)) filtered.push_back(w);
    }
    if (filtered.empty()) continue;
    std::size_t in_vocab = 0;
    for (const auto& w : filtered) in_vocab += vocabulary.count(w);
    double coverage =
        static_cast<double>(in_vocab) / static_cast<double>(filtered.size());
    if (coverage < coverage_threshold) continue;
    if (kept % 11 == 10) {
      out.dev.push_back(std::move(filtered));
    } else {
      out.train.push_back(std::move(filtered));
    }
    ++kept;
  }
  return out;
}

}  // namespace csflm
