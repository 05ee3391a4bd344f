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

#include "csflm/types.hpp"

#include "csflm/error.hpp"

namespace csflm {

const char* to_string(LanguageTag tag) {
  switch (tag) {
    case LanguageTag::Man:
      return "MAN";
    case LanguageTag::En:
      return "EN";
    case LanguageTag::Part:
      return "PART";
    case LanguageTag::Other:
      return "OTHER";
  }
  return "OTHER";
}

LanguageTag language_tag_from_string(const std::string& s) {
  if (s == "MAN") return LanguageTag::Man;
  if (s == "EN") return LanguageTag::En;
  if (s == "PART") return LanguageTag::Part;
  if (s == "OTHER") return LanguageTag::Other;
  throw ParseError("unknown language tag '" + s + "'");
}

const char* factor_key(FactorKind kind) {
  switch (kind) {
    case FactorKind::Word:
      return "W";
    case FactorKind::Lid:
      return "L";
    case FactorKind::Pos:
      return "P";
    case FactorKind::Brown:
      return "C";
    case FactorKind::Oc:
      return "OC";
    case FactorKind::Occ:
      return "OCC";
  }
  return "W";
}

std::optional<FactorKind> factor_kind_from_key(const std::string& key) {
  if (key == "W") return FactorKind::Word;
  if (key == "L") return FactorKind::Lid;
  if (key == "P") return FactorKind::Pos;
  if (key == "C") return FactorKind::Brown;
  if (key == "OC") return FactorKind::Oc;
  if (key == "OCC") return FactorKind::Occ;
  return std::nullopt;
}

namespace {
std::optional<std::string> kNullString;
}

const std::optional<std::string>& FactoredToken::string_factor(
    FactorKind kind) const {
  switch (kind) {
    case FactorKind::Pos:
      return pos;
    case FactorKind::Brown:
      return brown;
    case FactorKind::Oc:
      return oc;
    case FactorKind::Occ:
      return occ;
    default:
      return kNullString;
  }
}

std::optional<std::string>& FactoredToken::string_factor(FactorKind kind) {
  switch (kind) {
    case FactorKind::Pos:
      return pos;
    case FactorKind::Brown:
      return brown;
    case FactorKind::Oc:
      return oc;
    case FactorKind::Occ:
      return occ;
    default:
      throw InvalidArgument("factor is not a plain string factor");
  }
}

std::optional<std::string> FactoredToken::factor_value(FactorKind kind) const {
  switch (kind) {
    case FactorKind::Word:
      return word;
    case FactorKind::Lid:
      if (!lid) return std::nullopt;
      return std::string(to_string(*lid));
    default:
      return string_factor(kind);
  }
}

const char* to_string(Split split) {
  switch (split) {
    case Split::Train:
      return "train";
    case Split::Dev:
      return "dev";
    case Split::Eval:
      return "eval";
  }
  return "train";
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "dev") return Split::Dev;
  if (s == "eval") return Split::Eval;
  throw ParseError("unknown split '" + s + "'");
}

void Corpus::add(Utterance utt, Split split) {
  utterances.push_back(std::move(utt));
  split_of.push_back(split);
}

std::vector<std::size_t> Corpus::split_indices(Split split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < utterances.size(); ++i) {
    if (split_of[i] == split) out.push_back(i);
  }
  return out;
}

std::size_t Corpus::token_count() const {
  std::size_t n = 0;
  for (const auto& u : utterances) n += u.tokens.size();
  return n;
}

std::size_t Corpus::token_count(Split split) const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < utterances.size(); ++i) {
    if (split_of[i] == split) n += utterances[i].tokens.size();
  }
  return n;
}

Vocabulary::Vocabulary() {
  id_to_word_ = {kUnkWord, kSentBegin, kSentEnd};
  counts_ = {0, 0, 0};
  for (int i = 0; i < kFirstWordId; ++i) word_to_id_[id_to_word_[i]] = i;
}

void Vocabulary::add_word(const std::string& word, std::int64_t count) {
  if (word_to_id_.count(word)) {
    throw InvalidArgument("duplicate vocabulary word '" + word + "'");
  }
  word_to_id_[word] = static_cast<int>(id_to_word_.size());
  id_to_word_.push_back(word);
  counts_.push_back(count);
}

int Vocabulary::id_of(const std::string& word) const {
  auto it = word_to_id_.find(word);
  return it == word_to_id_.end() ? kUnkId : it->second;
}

bool Vocabulary::contains(const std::string& word) const {
  return word_to_id_.count(word) != 0;
}

const std::string& Vocabulary::word_of(int id) const {
  return id_to_word_.at(static_cast<std::size_t>(id));
}

std::int64_t Vocabulary::count_of(int id) const {
  return counts_.at(static_cast<std::size_t>(id));
}

}  // namespace csflm
