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

#ifndef CSFLM_ANNOTATE_HPP
#define CSFLM_ANNOTATE_HPP

#include <functional>
#include <string>
#include <vector>

#include "csflm/clusters.hpp"
#include "csflm/corpus.hpp"
#include "csflm/types.hpp"

namespace csflm {

// A pluggable POS tagger for one language: token surfaces in, one tag per
// token out. Real taggers can be plugged in through the factored file
// format; the built-in tagger is a unigram lexicon tagger.
struct Tagger {
  LanguageTag language = LanguageTag::En;
  std::function<std::vector<std::string>(const std::vector<std::string>&)> tag;
};

// Unigram most-frequent-tag tagger trained from a corpus with P factors,
// restricted to tokens of the given language. Unseen words get the overall
// majority tag; ties resolve to the lexicographically smallest tag.
Tagger lexicon_tagger(const Corpus& train, LanguageTag language);

// Maximal run of >= 3 consecutive embedded-language tokens.
struct LanguageIsland {
  std::size_t begin;  // inclusive
  std::size_t end;    // inclusive

  bool operator==(const LanguageIsland&) const = default;
};

std::vector<LanguageIsland> find_islands(const Utterance& utterance,
                                         LanguageTag embedded);

// POS tagging for code-switching utterances: language islands go to the
// embedded tagger, everything else to the matrix tagger, then every embedded
// word outside an island is re-tagged by the embedded tagger with at most one
// word of context on each side. Particles get the fixed PARTICLE tag.
Utterance tag_pos_cs(const Utterance& utterance, const Tagger& matrix_tagger,
                     const Tagger& embedded_tagger);

void tag_pos_cs(Corpus& corpus, const Tagger& matrix_tagger,
                const Tagger& embedded_tagger);

// Per-language function-word lists; words not listed are open class.
struct FunctionWordLists {
  WordSet en;
  WordSet man;
};

// True iff the token is an EN/MAN word outside its language's function-word
// list. Particles and OTHER tokens are closed class by definition.
bool is_open_class(const std::string& word, const FunctionWordLists& lists,
                   LanguageTag lid);

struct OcStrategy {
  enum class Kind { PerSentence, PerSpeaker, Window };
  Kind kind = Kind::PerSpeaker;
  // Window size; 0 means unlimited. Only meaningful for Kind::Window.
  int window_size = 0;

  static OcStrategy per_sentence() { return {Kind::PerSentence, 0}; }
  static OcStrategy per_speaker() { return {Kind::PerSpeaker, 0}; }
  static OcStrategy window(int n) { return {Kind::Window, n}; }  // n = 0: unlimited

  // "sentence", "speaker", "window:N", "window:unlimited"
  static OcStrategy from_string(const std::string& s);
  std::string to_string() const;
};

// Fills the OC factor of every token with the open-class word determined by
// the strategy; <no_oc> before any open-class word has been seen. State is
// kept per speaker for the speaker/window strategies.
Corpus annotate_oc(const Corpus& corpus, const OcStrategy& strategy,
                   const FunctionWordLists& lists);

// Replaces factor values with cluster IDs: tokens (slot Brown) or OC factors
// (slot Occ) covered by the assignment get the cluster ID as a string;
// uncovered values keep the word itself.
Corpus map_cluster_factor(const Corpus& corpus, const ClusterAssignment& assignment,
                          FactorKind slot);

}  // namespace csflm

#endif  // CSFLM_ANNOTATE_HPP
