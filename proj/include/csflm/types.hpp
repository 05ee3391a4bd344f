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

#ifndef CSFLM_TYPES_HPP
#define CSFLM_TYPES_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace csflm {

// Reserved symbols. <s> and </s> are virtual: they are injected at scoring
// time and never stored in a corpus.
inline constexpr const char* kUnkWord = "<unk>";
inline constexpr const char* kSentBegin = "<s>";
inline constexpr const char* kSentEnd = "</s>";
// Placeholder for "no open-class word seen yet"; distinct from <unk>.
inline constexpr const char* kNoOc = "<no_oc>";
// Fixed POS tag assigned to discourse particles.
inline constexpr const char* kParticleTag = "PARTICLE";

enum class LanguageTag { Man, En, Part, Other };

const char* to_string(LanguageTag tag);
// Throws ParseError on unknown names.
LanguageTag language_tag_from_string(const std::string& s);

// Factor slots of a token, in serialization order.
enum class FactorKind { Word, Lid, Pos, Brown, Oc, Occ };
inline constexpr int kNumFactorKinds = 6;

const char* factor_key(FactorKind kind);
std::optional<FactorKind> factor_kind_from_key(const std::string& key);

// A word together with its factor bundle. Factors other than the word are
// optional and, once assigned, are never silently dropped. Cluster factors
// are stored as strings because words not covered by a cluster map keep
// their surface form as the factor value.
struct FactoredToken {
  std::string word;
  std::optional<LanguageTag> lid;
  std::optional<std::string> pos;
  std::optional<std::string> brown;
  std::optional<std::string> oc;
  std::optional<std::string> occ;

  const std::optional<std::string>& string_factor(FactorKind kind) const;
  std::optional<std::string>& string_factor(FactorKind kind);
  // Factor value as a string; Word and Lid included. nullopt when unset.
  std::optional<std::string> factor_value(FactorKind kind) const;

  bool operator==(const FactoredToken&) const = default;
};

struct Utterance {
  std::string speaker;
  std::vector<FactoredToken> tokens;

  bool operator==(const Utterance&) const = default;
};

enum class Split { Train, Dev, Eval };
inline constexpr int kNumSplits = 3;

const char* to_string(Split split);
Split split_from_string(const std::string& s);

// Ordered utterances, each assigned to exactly one split.
struct Corpus {
  std::vector<Utterance> utterances;
  std::vector<Split> split_of;  // parallel to utterances

  std::size_t size() const { return utterances.size(); }
  bool empty() const { return utterances.empty(); }

  void add(Utterance utt, Split split);

  // Indices of utterances in the given split, in corpus order.
  std::vector<std::size_t> split_indices(Split split) const;
  std::size_t token_count() const;
  std::size_t token_count(Split split) const;

  bool operator==(const Corpus&) const = default;
};

// Word -> contiguous integer IDs with reserved slots:
//   0 = <unk>, 1 = <s>, 2 = </s>, then known words.
class Vocabulary {
 public:
  static constexpr int kUnkId = 0;
  static constexpr int kSentBeginId = 1;
  static constexpr int kSentEndId = 2;
  static constexpr int kFirstWordId = 3;

  Vocabulary();

  // Adds a known word with its corpus count. Words must be unique.
  void add_word(const std::string& word, std::int64_t count);

  int id_of(const std::string& word) const;  // kUnkId for unknown words
  bool contains(const std::string& word) const;
  const std::string& word_of(int id) const;
  std::int64_t count_of(int id) const;

  int size() const { return static_cast<int>(id_to_word_.size()); }
  int num_known_words() const { return size() - kFirstWordId; }

 private:
  std::vector<std::string> id_to_word_;
  std::vector<std::int64_t> counts_;
  std::unordered_map<std::string, int> word_to_id_;
};

}  // namespace csflm

#endif  // CSFLM_TYPES_HPP
