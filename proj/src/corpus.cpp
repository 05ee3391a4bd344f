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

#include "csflm/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "csflm/error.hpp"

namespace csflm {

namespace {

// Decodes the UTF-8 codepoint starting at position i; advances i past it.
// Malformed bytes decode as U+FFFD one byte at a time.
char32_t decode_utf8(const std::string& s, std::size_t& i) {
  unsigned char b0 = static_cast<unsigned char>(s[i]);
  std::size_t len;
  char32_t cp;
  if (b0 < 0x80) {
    len = 1;
    cp = b0;
  } else if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    ++i;
    return 0xFFFD;
  }
  if (i + len > s.size()) {
    ++i;
    return 0xFFFD;
  }
  for (std::size_t k = 1; k < len; ++k) {
    unsigned char b = static_cast<unsigned char>(s[i + k]);
    if ((b & 0xC0) != 0x80) {
      ++i;
      return 0xFFFD;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  i += len;
  return cp;
}

bool is_cjk(char32_t cp) {
  return (cp >= 0x3400 && cp <= 0x4DBF) ||    // Extension A
         (cp >= 0x4E00 && cp <= 0x9FFF) ||    // Unified Ideographs
         (cp >= 0xF900 && cp <= 0xFAFF) ||    // Compatibility ideographs
         (cp >= 0x20000 && cp <= 0x3134F);    // Extensions B..G
}

bool is_latin_letter(char32_t cp) {
  if ((cp >= 'A' && cp <= 'Z') || (cp >= 'a' && cp <= 'z')) return true;
  // Latin-1 supplement letters and Latin Extended-A/B.
  if (cp >= 0xC0 && cp <= 0x24F) return cp != 0xD7 && cp != 0xF7;
  return false;
}

}  // namespace

LanguageTag assign_lid(const std::string& word,
                       const WordSet& particle_lexicon) {
  if (particle_lexicon.count(word)) return LanguageTag::Part;
  bool all_latin = !word.empty();
  for (std::size_t i = 0; i < word.size();) {
    char32_t cp = decode_utf8(word, i);
    if (is_cjk(cp)) return LanguageTag::Man;
    if (!is_latin_letter(cp)) all_latin = false;
  }
  return all_latin ? LanguageTag::En : LanguageTag::Other;
}

void assign_lids(Corpus& corpus, const WordSet& particle_lexicon) {
  for (auto& utt : corpus.utterances) {
    for (auto& tok : utt.tokens) {
      tok.lid = assign_lid(tok.word, particle_lexicon);
    }
  }
}

WordSet read_word_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open word list '" + path + "'");
  WordSet words;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) words.insert(line);
  }
  return words;
}

void write_word_list(const WordSet& words, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write word list '" + path + "'");
  for (const auto& w : words) out << w << '\n';
}

namespace {

FactoredToken parse_token(const std::string& field, int line_no) {
  FactoredToken tok;
  bool seen[kNumFactorKinds] = {};
  std::size_t start = 0;
  while (start <= field.size()) {
    std::size_t colon = field.find(':', start);
    std::string part = field.substr(
        start, colon == std::string::npos ? std::string::npos : colon - start);
    std::size_t dash = part.find('-');
    if (dash == std::string::npos || dash == 0) {
      throw ParseError("malformed factor '" + part + "'", line_no);
    }
    std::string key = part.substr(0, dash);
    std::string value = part.substr(dash + 1);
    auto kind = factor_kind_from_key(key);
    if (!kind) throw ParseError("unknown factor key " + key, line_no);
    if (seen[static_cast<int>(*kind)]) {
      throw ParseError("duplicate factor key " + key, line_no);
    }
    seen[static_cast<int>(*kind)] = true;
    if (value.empty()) {
      throw ParseError("empty value for factor key " + key, line_no);
    }
    switch (*kind) {
      case FactorKind::Word:
        tok.word = value;
        break;
      case FactorKind::Lid:
        try {
          tok.lid = language_tag_from_string(value);
        } catch (const ParseError&) {
          throw ParseError("unknown language tag '" + value + "'", line_no);
        }
        break;
      default:
        tok.string_factor(*kind) = value;
        break;
    }
    if (colon == std::string::npos) break;
    start = colon + 1;
  }
  if (!seen[static_cast<int>(FactorKind::Word)]) {
    throw ParseError("token without W factor", line_no);
  }
  return tok;
}

}  // namespace

Corpus read_factored(std::istream& in, const std::string& name) {
  Corpus corpus;
  std::string line;
  int line_no = 0;
  Split split = Split::Train;
  std::string speaker;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      throw ParseError("empty line in '" + name + "'", line_no);
    }
    if (line[0] == '#') {
      if (line.rfind("#speaker=", 0) == 0) {
        speaker = line.substr(9);
      } else if (line.rfind("#split=", 0) == 0) {
        try {
          split = split_from_string(line.substr(7));
        } catch (const ParseError& e) {
          throw ParseError(e.what(), line_no);
        }
      } else {
        throw ParseError("unknown directive '" + line + "'", line_no);
      }
      continue;
    }
    Utterance utt;
    utt.speaker = speaker;
    std::istringstream fields(line);
    std::string field;
    while (fields >> field) utt.tokens.push_back(parse_token(field, line_no));
    if (utt.tokens.empty()) {
      throw ParseError("utterance without tokens", line_no);
    }
    corpus.add(std::move(utt), split);
  }
  return corpus;
}

Corpus read_factored(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus '" + path + "'");
  return read_factored(in, path);
}

std::string format_token(const FactoredToken& token) {
  std::string out = "W-" + token.word;
  if (token.lid) {
    out += ":L-";
    out += to_string(*token.lid);
  }
  static constexpr FactorKind kStringKinds[] = {FactorKind::Pos,
                                                FactorKind::Brown,
                                                FactorKind::Oc, FactorKind::Occ};
  for (FactorKind kind : kStringKinds) {
    const auto& v = token.string_factor(kind);
    if (v) {
      out += ':';
      out += factor_key(kind);
      out += '-';
      out += *v;
    }
  }
  return out;
}

void write_factored(const Corpus& corpus, std::ostream& out) {
  static constexpr Split kOrder[] = {Split::Train, Split::Dev, Split::Eval};
  for (Split split : kOrder) {
    bool split_open = false;
    const std::string* current_speaker = nullptr;
    for (std::size_t i = 0; i < corpus.utterances.size(); ++i) {
      if (corpus.split_of[i] != split) continue;
      const Utterance& utt = corpus.utterances[i];
      if (!split_open) {
        out << "#split=" << to_string(split) << '\n';
        split_open = true;
      }
      if (current_speaker == nullptr || *current_speaker != utt.speaker) {
        out << "#speaker=" << utt.speaker << '\n';
        current_speaker = &utt.speaker;
      }
      for (std::size_t t = 0; t < utt.tokens.size(); ++t) {
        if (t > 0) out << ' ';
        out << format_token(utt.tokens[t]);
      }
      out << '\n';
    }
  }
}

void write_factored(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write corpus '" + path + "'");
  write_factored(corpus, out);
}

namespace {

Vocabulary vocabulary_from_counts(
    const std::map<std::string, std::int64_t>& counts, std::int64_t min_count) {
  std::vector<std::pair<std::string, std::int64_t>> order(counts.begin(),
                                                          counts.end());
  std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocabulary vocab;
  for (const auto& [word, count] : order) {
    if (count >= min_count) vocab.add_word(word, count);
  }
  return vocab;
}

}  // namespace

Vocabulary build_vocabulary(const Corpus& corpus, std::int64_t min_count) {
  if (corpus.empty()) throw InvalidArgument("cannot build vocabulary: empty corpus");
  std::map<std::string, std::int64_t> counts;
  for (const auto& utt : corpus.utterances) {
    for (const auto& tok : utt.tokens) ++counts[tok.word];
  }
  return vocabulary_from_counts(counts, min_count);
}

Vocabulary build_vocabulary(const Corpus& corpus, Split split,
                            std::int64_t min_count) {
  if (corpus.empty()) throw InvalidArgument("cannot build vocabulary: empty corpus");
  std::map<std::string, std::int64_t> counts;
  for (std::size_t i = 0; i < corpus.utterances.size(); ++i) {
    if (corpus.split_of[i] != split) continue;
    for (const auto& tok : corpus.utterances[i].tokens) ++counts[tok.word];
  }
  return vocabulary_from_counts(counts, min_count);
}

}  // namespace csflm
