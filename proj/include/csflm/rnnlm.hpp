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

#ifndef CSFLM_RNNLM_HPP
#define CSFLM_RNNLM_HPP

#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "csflm/corpus.hpp"

namespace csflm {

// One token sequence per line; the unit of hidden-state reset.
using TextLines = std::vector<std::vector<std::string>>;

TextLines read_text_lines(const std::string& path);
void write_text_lines(const TextLines& lines, const std::string& path);

// Per-word embedding vectors of a fixed dimension.
struct EmbeddingMatrix {
  int dim = 0;
  std::map<std::string, std::vector<double>> vectors;

  void check() const;  // same dimension everywhere, finite entries
};

// Text format: word followed by `dim` decimals per line.
EmbeddingMatrix load_embeddings(const std::string& path);
EmbeddingMatrix load_embeddings(std::istream& in, const std::string& name);
void save_embeddings(const EmbeddingMatrix& matrix, const std::string& path);
void save_embeddings(const EmbeddingMatrix& matrix, std::ostream& out);

// Elman recurrent network language model: one-hot input, sigmoid hidden
// layer fed by the previous hidden state, softmax output over the
// vocabulary. Word embeddings live in the input-to-hidden weight rows.
// Training is plain SGD with backpropagation through time, one update per
// line; the hidden state is reset at every line start.
class RnnLm {
 public:
  struct TrainConfig {
    int hidden = 100;
    int bptt_steps = 5;
    int epochs = 5;
    double learning_rate = 0.1;
    double init_scale = 0.1;
    std::uint64_t seed = 1;
    // The learning rate is halved after any epoch whose dev (or train, when
    // no dev text is given) perplexity fails to improve by this factor.
    double halving_threshold = 0.9999;
  };

  struct TrainTrace {
    std::vector<double> train_ppl;  // per epoch
    std::vector<double> dev_ppl;    // per epoch, when dev text present
    std::vector<double> learning_rate;
  };

  static RnnLm train(const TextLines& text, const TrainConfig& config,
                     const TextLines* dev = nullptr, TrainTrace* trace = nullptr);

  int hidden_size() const { return hidden_; }
  int vocab_size() const { return static_cast<int>(words_.size()); }
  const std::vector<std::string>& words() const { return words_; }
  int word_id(const std::string& word) const;  // <unk> id for unknown words

  // Total log2 probability of a line's events (each token plus the
  // end-of-line event), with the hidden state freshly reset.
  double line_log2prob(const std::vector<std::string>& line) const;

  // PPL = 2^(-(1/N) sum log2 p) over all events of the text.
  double perplexity(const TextLines& text) const;

  // Output distribution at each step of a line; rows sum to 1.
  std::vector<std::vector<double>> forward_distributions(
      const std::vector<std::string>& line) const;

  // Rows of the input-to-hidden matrix for the requested words; every word
  // must be in the vocabulary or an error lists the offenders.
  EmbeddingMatrix extract_embeddings(const std::set<std::string>& words) const;
  EmbeddingMatrix extract_all_embeddings() const;

  void save(std::ostream& out) const;
  void save(const std::string& path) const;
  static RnnLm load(std::istream& in);
  static RnnLm load_file(const std::string& path);

  // Gradients of the total line loss (natural-log cross-entropy) at the
  // current weights, truncated to bptt_steps; exact when bptt_steps covers
  // the line. Exposed for gradient checking.
  struct Gradients {
    std::vector<std::vector<double>> input_hidden;   // |V| x H
    std::vector<std::vector<double>> hidden_hidden;  // H x H
    std::vector<std::vector<double>> hidden_output;  // H x |V|
    double loss = 0.0;
  };
  Gradients line_gradients(const std::vector<std::string>& line,
                           int bptt_steps) const;

  // Weight access for finite-difference checks.
  std::vector<std::vector<double>>& input_hidden() { return u_; }
  std::vector<std::vector<double>>& hidden_hidden() { return w_; }
  std::vector<std::vector<double>>& hidden_output() { return v_; }

 private:
  RnnLm() = default;

  std::vector<int> line_ids(const std::vector<std::string>& line) const;

  int hidden_ = 0;
  std::vector<std::string> words_;  // id -> word; includes </s> and <unk>
  std::map<std::string, int> word_to_id_;
  std::vector<std::vector<double>> u_;  // |V| x H, input -> hidden
  std::vector<std::vector<double>> w_;  // H x H, hidden -> hidden
  std::vector<std::vector<double>> v_;  // H x |V|, hidden -> output
};

struct OcTrainingText {
  TextLines train;
  TextLines dev;
};

// Builds embedding-training text from monolingual lines: function words are
// removed, a line is kept iff its in-vocabulary token fraction reaches
// coverage_threshold (lines left empty are dropped), and every 11th kept
// line goes to the dev set (a 10:1 split).
OcTrainingText build_oc_training_text(const TextLines& lines,
                                      const WordSet& vocabulary,
                                      const WordSet& function_words,
                                      double coverage_threshold);

}  // namespace csflm

#endif  // CSFLM_RNNLM_HPP
