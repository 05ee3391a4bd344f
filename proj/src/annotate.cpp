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

#include "csflm/annotate.hpp"

#include <deque>
#include <map>
#include <memory>

#include "csflm/error.hpp"

namespace csflm {

Tagger lexicon_tagger(const Corpus& train, LanguageTag language) {
  // word -> tag -> count, plus overall tag counts for the fallback.
  auto counts = std::make_shared<std::map<std::string, std::map<std::string, long long>>>();
  std::map<std::string, long long> tag_totals;
  for (const auto& utt : train.utterances) {
    for (const auto& tok : utt.tokens) {
      if (!tok.pos || !tok.lid || *tok.lid != language) continue;
      ++(*counts)[tok.word][*tok.pos];
      ++tag_totals[*tok.pos];
    }
  }
  if (tag_totals.empty()) {
    throw InvalidArgument("lexicon_tagger: no tagged training tokens for " +
                          std::string(to_string(language)));
  }
  auto majority = [](const std::map<std::string, long long>& m) {
    std::string best;
    long long best_count = -1;
    for (const auto& [tag, count] : m) {
      // std::map iterates tags in lexicographic order, so on ties the
      // smallest tag wins by keeping the first maximum.
      if (count > best_count) {
        best = tag;
        best_count = count;
      }
    }
    return best;
  };
  std::string fallback = majority(tag_totals);
  Tagger tagger;
  tagger.language = language;
  tagger.tag = [counts, fallback, majority](const std::vector<std::string>& words) {
    std::vector<std::string> tags;
    tags.reserve(words.size());
    for (const auto& w : words) {
      auto it = counts->find(w);
      tags.push_back(it == counts->end() ? fallback : majority(it->second));
    }
    return tags;
  };
  return tagger;
}

std::vector<LanguageIsland> find_islands(const Utterance& utterance,
                                         LanguageTag embedded) {
  std::vector<LanguageIsland> islands;
  const auto& toks = utterance.tokens;
  std::size_t i = 0;
  while (i < toks.size()) {
    if (toks[i].lid == embedded) {
      std::size_t j = i;
      while (j + 1 < toks.size() && toks[j + 1].lid == embedded) ++j;
      if (j - i + 1 >= 3) islands.push_back({i, j});
      i = j + 1;
    } else {
      ++i;
    }
  }
  return islands;
}

namespace {

std::vector<std::string> run_tagger(const Tagger& tagger,
                                    const std::vector<std::string>& words) {
  std::vector<std::string> tags = tagger.tag(words);
  if (tags.size() != words.size()) {
    throw Error("tagger returned " + std::to_string(tags.size()) + " tags for " +
                std::to_string(words.size()) + " words");
  }
  return tags;
}

}  // namespace

Utterance tag_pos_cs(const Utterance& utterance, const Tagger& matrix_tagger,
                     const Tagger& embedded_tagger) {
  const std::size_t n = utterance.tokens.size();
  LanguageTag embedded = embedded_tagger.language;
  std::vector<LanguageIsland> islands = find_islands(utterance, embedded);
  std::vector<bool> in_island(n, false);
  for (const auto& island : islands) {
    for (std::size_t i = island.begin; i <= island.end; ++i) in_island[i] = true;
  }

  std::vector<std::string> tags(n);
  for (const auto& island : islands) {
    std::vector<std::string> words;
    for (std::size_t i = island.begin; i <= island.end; ++i) {
      words.push_back(utterance.tokens[i].word);
    }
    std::vector<std::string> island_tags = run_tagger(embedded_tagger, words);
    for (std::size_t i = island.begin; i <= island.end; ++i) {
      tags[i] = island_tags[i - island.begin];
    }
  }
  // The remainder is tagged segment-wise by the matrix tagger so it sees as
  // much context as possible.
  std::size_t i = 0;
  while (i < n) {
    if (in_island[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < n && !in_island[j + 1]) ++j;
    std::vector<std::string> words;
    for (std::size_t k = i; k <= j; ++k) words.push_back(utterance.tokens[k].word);
    std::vector<std::string> seg_tags = run_tagger(matrix_tagger, words);
    for (std::size_t k = i; k <= j; ++k) tags[k] = seg_tags[k - i];
    i = j + 1;
  }
  // Embedded words outside islands are re-tagged with one word of context on
  // each side; the resulting tags replace the matrix tagger's.
  for (std::size_t k = 0; k < n; ++k) {
    if (in_island[k] || utterance.tokens[k].lid != embedded) continue;
    std::vector<std::string> words;
    std::size_t middle = 0;
    if (k > 0) {
      words.push_back(utterance.tokens[k - 1].word);
      middle = 1;
    }
    words.push_back(utterance.tokens[k].word);
    if (k + 1 < n) words.push_back(utterance.tokens[k + 1].word);
    std::vector<std::string> ctx_tags = run_tagger(embedded_tagger, words);
    tags[k] = ctx_tags[middle];
  }
  Utterance out = utterance;
  for (std::size_t k = 0; k < n; ++k) {
    out.tokens[k].pos =
        out.tokens[k].lid == LanguageTag::Part ? kParticleTag : tags[k];
  }
  return out;
}

void tag_pos_cs(Corpus& corpus, const Tagger& matrix_tagger,
                const Tagger& embedded_tagger) {
  for (auto& utt : corpus.utterances) {
    utt = tag_pos_cs(utt, matrix_tagger, embedded_tagger);
  }
}

bool is_open_class(const std::string& word, const FunctionWordLists& lists,
                   LanguageTag lid) {
  switch (lid) {
    case LanguageTag::En:
      return lists.en.count(word) == 0;
    case LanguageTag::Man:
      return lists.man.count(word) == 0;
    default:
      return false;
  }
}

OcStrategy OcStrategy::from_string(const std::string& s) {
  if (s == "sentence") return per_sentence();
  if (s == "speaker") return per_speaker();
  if (s.rfind("window:", 0) == 0) {
    std::string arg = s.substr(7);
    if (arg == "unlimited") return window(0);
    int n;
    try {
      n = std::stoi(arg);
    } catch (const std::exception&) {
      throw InvalidArgument("bad OC window size '" + arg + "'");
    }
    if (n < 1) throw InvalidArgument("OC window size must be >= 1");
    return window(n);
  }
  throw InvalidArgument("unknown OC strategy '" + s + "'");
}

std::string OcStrategy::to_string() const {
  switch (kind) {
    case Kind::PerSentence:
      return "sentence";
    case Kind::PerSpeaker:
      return "speaker";
    case Kind::Window:
      return window_size == 0 ? "window:unlimited"
                             : "window:" + std::to_string(window_size);
  }
  return "speaker";
}

namespace {

// Most frequent word in the window; ties go to the most recent occurrence.
std::string window_mode(const std::deque<std::string>& window) {
  if (window.empty()) return kNoOc;
  std::map<std::string, std::pair<long long, std::size_t>> stats;  // count, last pos
  for (std::size_t i = 0; i < window.size(); ++i) {
    auto& s = stats[window[i]];
    ++s.first;
    s.second = i;
  }
  const std::string* best = nullptr;
  std::pair<long long, std::size_t> best_stat{-1, 0};
  for (const auto& [word, stat] : stats) {
    if (stat > best_stat) {
      best = &word;
      best_stat = stat;
    }
  }
  return *best;
}

}  // namespace

Corpus annotate_oc(const Corpus& corpus, const OcStrategy& strategy,
                   const FunctionWordLists& lists) {
  Corpus out = corpus;
  // Per-speaker history for the speaker/window strategies.
  std::map<std::string, std::deque<std::string>> history;
  for (auto& utt : out.utterances) {
    std::deque<std::string>* window = nullptr;
    std::deque<std::string> sentence_window;
    if (strategy.kind == OcStrategy::Kind::PerSentence) {
      window = &sentence_window;
    } else {
      window = &history[utt.speaker];
    }
    std::size_t cap = 1;  // PerSentence/PerSpeaker only track the last word
    if (strategy.kind == OcStrategy::Kind::Window) {
      cap = strategy.window_size == 0 ? 0 : static_cast<std::size_t>(strategy.window_size);
    }
    for (auto& tok : utt.tokens) {
      if (!tok.lid) {
        throw InvalidArgument("annotate_oc requires LIDs on every token");
      }
      tok.oc = strategy.kind == OcStrategy::Kind::Window
                   ? window_mode(*window)
                   : (window->empty() ? kNoOc : window->back());
      if (is_open_class(tok.word, lists, *tok.lid)) {
        window->push_back(tok.word);
        if (cap != 0 && window->size() > cap) window->pop_front();
      }
    }
  }
  return out;
}

Corpus map_cluster_factor(const Corpus& corpus, const ClusterAssignment& assignment,
                          FactorKind slot) {
  if (slot != FactorKind::Brown && slot != FactorKind::Occ) {
    throw InvalidArgument("cluster factors can only fill the C or OCC slot");
  }
  Corpus out = corpus;
  for (auto& utt : out.utterances) {
    for (auto& tok : utt.tokens) {
      const std::string* source = nullptr;
      if (slot == FactorKind::Brown) {
        source = &tok.word;
      } else {
        if (!tok.oc) continue;  // nothing to map
        source = &*tok.oc;
      }
      int cluster = assignment.cluster_of(*source);
      tok.string_factor(slot) =
          cluster >= 0 ? std::to_string(cluster) : *source;
    }
  }
  return out;
}

}  // namespace csflm
