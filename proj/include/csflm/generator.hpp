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

#ifndef CSFLM_GENERATOR_HPP
#define CSFLM_GENERATOR_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "csflm/corpus.hpp"
#include "csflm/types.hpp"

namespace csflm {

// Synthetic Mandarin-English code-switching corpus generator. Stands in for
// licensed conversational data in tests and bundled experiments. Each word
// belongs to a latent category; categories drive both the word choice (via a
// sticky category chain) and the probability of switching language before
// the next content token, so trigger categories produce elevated CS rates by
// construction. Ground-truth categories are emitted as the P factor.
struct GeneratorConfig {
  int man_vocab_size = 400;
  int en_vocab_size = 300;
  std::vector<std::string> categories = {"noun", "verb", "adj", "func", "trig"};
  std::vector<double> category_usage = {0.3, 0.22, 0.13, 0.3, 0.05};
  // Additive boost on base_switch_prob applied after a token of the category.
  std::vector<double> trigger_boost = {0.0, 0.0, 0.0, 0.0, 0.4};
  // Words allocated per category and language; empty means proportional to
  // category_usage.
  std::vector<int> man_category_words;
  std::vector<int> en_category_words;
  // Categories whose words are closed-class (function words).
  std::vector<std::string> function_categories = {"func"};
  double base_switch_prob = 0.1;
  // Probability that the next content token repeats the previous category.
  double category_stickiness = 0.0;
  double zipf_exponent = 1.0;
  int utt_len_min = 4;
  int utt_len_max = 16;
  int num_utterances = 1000;
  int num_speakers = 8;
  std::vector<std::string> particles = {"lah", "lor", "leh"};
  double particle_prob = 0.0;
  double man_start_prob = 0.6;
  // Utterance-level split fractions; eval gets the remainder.
  double train_frac = 0.8;
  double dev_frac = 0.1;
  std::uint64_t seed = 1;

  void validate() const;  // throws InvalidArgument
};

// Key-value text file, one `key = value` per line, '#' comments. List values
// are whitespace-separated.
GeneratorConfig read_generator_config(const std::string& path);

struct SyntheticCorpus {
  Corpus corpus;
  // Ground-truth latent category per vocabulary word (uppercased in P).
  std::map<std::string, std::string> category_of_word;
  WordSet function_words_en;
  WordSet function_words_man;
  WordSet particle_lexicon;
};

// Deterministic for a fixed config (the seed lives in the config).
SyntheticCorpus generate_synthetic_cs(const GeneratorConfig& config);

}  // namespace csflm

#endif  // CSFLM_GENERATOR_HPP
