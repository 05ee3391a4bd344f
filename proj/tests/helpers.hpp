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

#ifndef CSFLM_TESTS_HELPERS_HPP
#define CSFLM_TESTS_HELPERS_HPP

#include <string>
#include <vector>

#include "csflm/types.hpp"

namespace csflm::test {

inline FactoredToken tok(std::string word, LanguageTag lid) {
  FactoredToken t;
  t.word = std::move(word);
  t.lid = lid;
  return t;
}

inline Utterance utt(std::string speaker, std::vector<FactoredToken> tokens) {
  Utterance u;
  u.speaker = std::move(speaker);
  u.tokens = std::move(tokens);
  return u;
}

// Utterance from "e1 m2 p0 o0" notation: prefix e=EN, m=MAN, p=PART, o=OTHER.
inline Utterance coded_utt(const std::string& speaker, const std::string& coded) {
  Utterance u;
  u.speaker = speaker;
  std::string word;
  auto flush = [&] {
    if (word.empty()) return;
    LanguageTag lid = LanguageTag::Other;
    switch (word[0]) {
      case 'e': lid = LanguageTag::En; break;
      case 'm': lid = LanguageTag::Man; break;
      case 'p': lid = LanguageTag::Part; break;
      default: lid = LanguageTag::Other; break;
    }
    u.tokens.push_back(tok(word, lid));
    word.clear();
  };
  for (char c : coded) {
    if (c == ' ') flush();
    else word += c;
  }
  flush();
  return u;
}

inline Corpus corpus_of(std::vector<Utterance> utterances,
                        Split split = Split::Train) {
  Corpus c;
  for (auto& u : utterances) c.add(std::move(u), split);
  return c;
}

}  // namespace csflm::test

#endif  // CSFLM_TESTS_HELPERS_HPP
