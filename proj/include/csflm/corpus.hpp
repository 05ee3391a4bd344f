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

#ifndef CSFLM_CORPUS_HPP
#define CSFLM_CORPUS_HPP

#include <cstdint>
#include <iosfwd>
#include <set>
#include <string>

#include "csflm/types.hpp"

namespace csflm {

using WordSet = std::set<std::string>;

// Language identification. Total and deterministic:
//   particle lexicon member -> PART
//   any CJK-block codepoint -> MAN (Mandarin is the matrix language, so
//                                   mixed-script tokens resolve to it)
//   all Latin letters       -> EN
//   anything else           -> OTHER
LanguageTag assign_lid(const std::string& word, const WordSet& particle_lexicon);

// Assigns LIDs to every token in place.
void assign_lids(Corpus& corpus, const WordSet& particle_lexicon);

// One word per line, UTF-8. Used for particle lexica and function-word lists.
WordSet read_word_list(const std::string& path);
void write_word_list(const WordSet& words, const std::string& path);

// Factored text format (one utterance per line):
//   #split=<train|dev|eval>   opens a split section (default: train)
//   #speaker=<id>             opens a speaker block
//   W-<word>[:L-<tag>][:P-<tag>][:C-<id>][:OC-<word>][:OCC-<id>] per token
// Unknown factor keys, duplicate keys and blank lines are parse errors
// carrying the line number. write_factored emits a canonical form for which
// read(write(c)) == c and write(read(f)) is byte-identical whenever f itself
// was produced by write_factored.
Corpus read_factored(const std::string& path);
Corpus read_factored(std::istream& in, const std::string& name);
void write_factored(const Corpus& corpus, const std::string& path);
void write_factored(const Corpus& corpus, std::ostream& out);
std::string format_token(const FactoredToken& token);

// Builds the vocabulary of a corpus (all splits). Words whose count is below
// min_count are dropped from the known set; their occurrences map to <unk>.
Vocabulary build_vocabulary(const Corpus& corpus, std::int64_t min_count = 1);

// As above but counting only the given split.
Vocabulary build_vocabulary(const Corpus& corpus, Split split,
                            std::int64_t min_count);

}  // namespace csflm

#endif  // CSFLM_CORPUS_HPP
