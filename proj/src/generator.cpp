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

#include "csflm/generator.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "csflm/error.hpp"
#include "csflm/rng.hpp"

namespace csflm {

void GeneratorConfig::validate() const {
  if (man_vocab_size <= 0 || en_vocab_size <= 0) {
    throw InvalidArgument("generator config with empty vocabulary");
  }
  if (categories.empty()) throw InvalidArgument("generator config: no categories");
  if (category_usage.size() != categories.size() ||
      trigger_boost.size() != categories.size()) {
    throw InvalidArgument(
        "generator config: category_usage/trigger_boost must match categories");
  }
  if (!man_category_words.empty() &&
      man_category_words.size() != categories.size()) {
    throw InvalidArgument("generator config: man_category_words length mismatch");
  }
  if (!en_category_words.empty() &&
      en_category_words.size() != categories.size()) {
    throw InvalidArgument("generator config: en_category_words length mismatch");
  }
  double usage_total = 0.0;
  for (double u : category_usage) {
    if (u < 0.0) throw InvalidArgument("generator config: negative usage weight");
    usage_total += u;
  }
  if (usage_total <= 0.0) {
    throw InvalidArgument("generator config: category_usage sums to zero");
  }
  if (base_switch_prob < 0.0 || base_switch_prob > 1.0) {
    throw InvalidArgument("generator config: base_switch_prob outside [0,1]");
  }
  if (utt_len_min < 1 || utt_len_max < utt_len_min) {
    throw InvalidArgument("generator config: bad utterance length bounds");
  }
  if (num_utterances < 1) throw InvalidArgument("generator config: no utterances");
  if (num_speakers < 1) throw InvalidArgument("generator config: no speakers");
  if (train_frac < 0.0 || dev_frac < 0.0 || train_frac + dev_frac > 1.0) {
    throw InvalidArgument("generator config: bad split fractions");
  }
  for (const auto& fc : function_categories) {
    if (std::find(categories.begin(), categories.end(), fc) == categories.end()) {
      throw InvalidArgument("generator config: unknown function category '" + fc +
                            "'");
    }
  }
}

namespace {

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

std::vector<double> parse_doubles(const std::string& s, const std::string& key) {
  std::vector<double> out;
  for (const auto& tok : split_ws(s)) {
    try {
      out.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw ParseError("generator config: bad number '" + tok + "' for " + key);
    }
  }
  return out;
}

std::vector<int> parse_ints(const std::string& s, const std::string& key) {
  std::vector<int> out;
  for (const auto& tok : split_ws(s)) {
    try {
      out.push_back(std::stoi(tok));
    } catch (const std::exception&) {
      throw ParseError("generator config: bad integer '" + tok + "' for " + key);
    }
  }
  return out;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

GeneratorConfig read_generator_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open generator config '" + path + "'");
  GeneratorConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError("generator config: missing '='", line_no);
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "man_vocab_size") cfg.man_vocab_size = std::stoi(value);
      else if (key == "en_vocab_size") cfg.en_vocab_size = std::stoi(value);
      else if (key == "categories") cfg.categories = split_ws(value);
      else if (key == "category_usage") cfg.category_usage = parse_doubles(value, key);
      else if (key == "trigger_boost") cfg.trigger_boost = parse_doubles(value, key);
      else if (key == "man_category_words") cfg.man_category_words = parse_ints(value, key);
      else if (key == "en_category_words") cfg.en_category_words = parse_ints(value, key);
      else if (key == "function_categories") cfg.function_categories = split_ws(value);
      else if (key == "base_switch_prob") cfg.base_switch_prob = std::stod(value);
      else if (key == "category_stickiness") cfg.category_stickiness = std::stod(value);
      else if (key == "zipf_exponent") cfg.zipf_exponent = std::stod(value);
      else if (key == "utt_len_min") cfg.utt_len_min = std::stoi(value);
      else if (key == "utt_len_max") cfg.utt_len_max = std::stoi(value);
      else if (key == "num_utterances") cfg.num_utterances = std::stoi(value);
      else if (key == "speakers") cfg.num_speakers = std::stoi(value);
      else if (key == "particles") cfg.particles = split_ws(value);
      else if (key == "particle_prob") cfg.particle_prob = std::stod(value);
      else if (key == "man_start_prob") cfg.man_start_prob = std::stod(value);
      else if (key == "train_frac") cfg.train_frac = std::stod(value);
      else if (key == "dev_frac") cfg.dev_frac = std::stod(value);
      else if (key == "seed") cfg.seed = std::stoull(value);
      else throw ParseError("generator config: unknown key '" + key + "'", line_no);
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception&) {
      throw ParseError("generator config: bad value for '" + key + "'", line_no);
    }
  }
  return cfg;
}

namespace {

std::string utf8_of(char32_t cp) {
  std::string out;
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
  return out;
}

// i-th Mandarin-like word: two CJK Unified Ideograph characters.
std::string man_word(int i) {
  return utf8_of(static_cast<char32_t>(0x4E00 + i / 160)) +
         utf8_of(static_cast<char32_t>(0x4E00 + 0x200 + i % 160));
}

// i-th English-like word: letters only so that assign_lid yields EN.
std::string en_word(int i) {
  std::string suffix;
  int x = i;
  do {
    suffix += static_cast<char>('a' + x % 26);
    x /= 26;
  } while (x > 0);
  std::reverse(suffix.begin(), suffix.end());
  return "w" + suffix;
}

std::string upper(const std::string& s) {
  std::string out = s;
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

struct Bucket {
  std::vector<std::string> words;
  std::vector<double> weights;  // Zipf over rank within the bucket
};

}  // namespace

SyntheticCorpus generate_synthetic_cs(const GeneratorConfig& config) {
  config.validate();
  const std::size_t ncat = config.categories.size();

  // Allocate words to (language, category) buckets.
  auto allocate = [&](int vocab_size, const std::vector<int>& explicit_counts) {
    std::vector<int> counts(ncat, 0);
    if (!explicit_counts.empty()) {
      counts = explicit_counts;
    } else {
      double total = 0.0;
      for (double u : config.category_usage) total += u;
      int assigned = 0;
      for (std::size_t c = 0; c < ncat; ++c) {
        counts[c] = static_cast<int>(config.category_usage[c] / total * vocab_size);
        assigned += counts[c];
      }
      for (std::size_t c = 0; assigned < vocab_size; c = (c + 1) % ncat) {
        ++counts[c];
        ++assigned;
      }
    }
    return counts;
  };
  std::vector<int> man_counts = allocate(config.man_vocab_size, config.man_category_words);
  std::vector<int> en_counts = allocate(config.en_vocab_size, config.en_category_words);

  SyntheticCorpus out;
  std::vector<Bucket> buckets[2];  // [0]=MAN, [1]=EN
  buckets[0].resize(ncat);
  buckets[1].resize(ncat);
  int man_next = 0, en_next = 0;
  for (std::size_t c = 0; c < ncat; ++c) {
    bool is_function =
        std::find(config.function_categories.begin(), config.function_categories.end(),
                  config.categories[c]) != config.function_categories.end();
    for (int k = 0; k < man_counts[c]; ++k) {
      std::string w = man_word(man_next++);
      buckets[0][c].words.push_back(w);
      out.category_of_word[w] = config.categories[c];
      if (is_function) out.function_words_man.insert(w);
    }
    for (int k = 0; k < en_counts[c]; ++k) {
      std::string w = en_word(en_next++);
      buckets[1][c].words.push_back(w);
      out.category_of_word[w] = config.categories[c];
      if (is_function) out.function_words_en.insert(w);
    }
    for (int lang = 0; lang < 2; ++lang) {
      auto& b = buckets[lang][c];
      b.weights.resize(b.words.size());
      for (std::size_t r = 0; r < b.words.size(); ++r) {
        b.weights[r] = 1.0 / std::pow(static_cast<double>(r + 1), config.zipf_exponent);
      }
    }
  }
  out.particle_lexicon.insert(config.particles.begin(), config.particles.end());

  Rng rng(config.seed);
  const int train_cut = static_cast<int>(std::lround(config.train_frac * 100));
  const int dev_cut = train_cut + static_cast<int>(std::lround(config.dev_frac * 100));

  for (int ui = 0; ui < config.num_utterances; ++ui) {
    Utterance utt;
    int spk = static_cast<int>(rng.next_index(static_cast<std::size_t>(config.num_speakers)));
    utt.speaker = "spk" + std::to_string(spk);
    int len = config.utt_len_min +
              static_cast<int>(rng.next_index(
                  static_cast<std::size_t>(config.utt_len_max - config.utt_len_min + 1)));
    int lang = rng.next_double() < config.man_start_prob ? 0 : 1;
    int prev_cat = -1;
    int emitted = 0;
    while (emitted < len) {
      if (!config.particles.empty() && rng.next_double() < config.particle_prob) {
        FactoredToken tok;
        tok.word = config.particles[rng.next_index(config.particles.size())];
        tok.lid = LanguageTag::Part;
        tok.pos = kParticleTag;
        utt.tokens.push_back(std::move(tok));
        ++emitted;
        continue;
      }
      // Draw a category available in the current language.
      int cat;
      if (prev_cat >= 0 && !buckets[lang][prev_cat].words.empty() &&
          rng.next_double() < config.category_stickiness) {
        cat = prev_cat;
      } else {
        std::vector<double> weights(ncat, 0.0);
        double total = 0.0;
        for (std::size_t c = 0; c < ncat; ++c) {
          if (!buckets[lang][c].words.empty()) {
            weights[c] = config.category_usage[c];
            total += weights[c];
          }
        }
        if (total <= 0.0) {
          throw InvalidArgument("generator config: language has no usable words");
        }
        cat = static_cast<int>(rng.next_weighted(weights));
      }
      const Bucket& bucket = buckets[lang][cat];
      FactoredToken tok;
      tok.word = bucket.words[rng.next_weighted(bucket.weights)];
      tok.lid = lang == 0 ? LanguageTag::Man : LanguageTag::En;
      tok.pos = upper(config.categories[cat]);
      utt.tokens.push_back(std::move(tok));
      ++emitted;
      prev_cat = cat;
      double p_switch = config.base_switch_prob + config.trigger_boost[cat];
      p_switch = std::clamp(p_switch, 0.0, 1.0);
      if (rng.next_double() < p_switch) lang = 1 - lang;
    }
    int r = ui % 100;
    Split split = r < train_cut ? Split::Train : r < dev_cut ? Split::Dev : Split::Eval;
    out.corpus.add(std::move(utt), split);
  }
  return out;
}

}  // namespace csflm
