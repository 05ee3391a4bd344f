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

#include "csflm/analysis.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "csflm/error.hpp"

namespace csflm {

const char* to_string(SwitchDirection d) {
  switch (d) {
    case SwitchDirection::ManToEn:
      return "man-to-en";
    case SwitchDirection::EnToMan:
      return "en-to-man";
    case SwitchDirection::Any:
      return "any";
  }
  return "any";
}

SwitchDirection switch_direction_from_string(const std::string& s) {
  if (s == "man-to-en") return SwitchDirection::ManToEn;
  if (s == "en-to-man") return SwitchDirection::EnToMan;
  if (s == "any") return SwitchDirection::Any;
  throw InvalidArgument("unknown switch direction '" + s + "'");
}

FeatureExtractor factor_extractor(FactorKind kind) {
  return [kind](const FactoredToken& tok) { return tok.factor_value(kind); };
}

std::vector<SwitchPoint> find_switch_points(const Corpus& corpus) {
  std::vector<SwitchPoint> points;
  for (std::size_t u = 0; u < corpus.utterances.size(); ++u) {
    const auto& tokens = corpus.utterances[u].tokens;
    // Walk anchor (MAN/EN) tokens; a change of language between consecutive
    // anchors is attributed to the token right before the later anchor.
    std::optional<LanguageTag> prev_anchor;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      const auto& lid = tokens[i].lid;
      if (!lid || (*lid != LanguageTag::Man && *lid != LanguageTag::En)) continue;
      if (prev_anchor && *prev_anchor != *lid) {
        points.push_back({u, i - 1,
                          *prev_anchor == LanguageTag::Man
                              ? SwitchDirection::ManToEn
                              : SwitchDirection::EnToMan});
      }
      prev_anchor = *lid;
    }
  }
  return points;
}

namespace {

bool direction_matches(SwitchDirection want, SwitchDirection got) {
  return want == SwitchDirection::Any || want == got;
}

struct FeatureCounts {
  std::map<std::string, TriggerRow> rows;
  std::int64_t total_extracted = 0;
};

FeatureCounts count_features(const Corpus& corpus, const FeatureExtractor& extractor) {
  FeatureCounts fc;
  for (const auto& utt : corpus.utterances) {
    for (const auto& tok : utt.tokens) {
      auto value = extractor(tok);
      if (!value) continue;
      auto& row = fc.rows[*value];
      row.feature = *value;
      ++row.total;
      ++fc.total_extracted;
    }
  }
  for (const auto& point : find_switch_points(corpus)) {
    const auto& tok = corpus.utterances[point.utterance].tokens[point.position];
    auto value = extractor(tok);
    if (!value) continue;
    auto& row = fc.rows[*value];
    if (point.direction == SwitchDirection::ManToEn) {
      ++row.pre_switch_man_en;
    } else {
      ++row.pre_switch_en_man;
    }
  }
  return fc;
}

}  // namespace

double TriggerRow::rate(SwitchDirection d) const {
  if (total == 0) return 0.0;
  std::int64_t pre = 0;
  if (direction_matches(d, SwitchDirection::ManToEn)) pre += pre_switch_man_en;
  if (direction_matches(d, SwitchDirection::EnToMan)) pre += pre_switch_en_man;
  return static_cast<double>(pre) / static_cast<double>(total);
}

double cs_rate(const Corpus& corpus, const FeatureExtractor& extractor,
               const std::string& feature, SwitchDirection direction) {
  std::int64_t total = 0;
  std::int64_t pre = 0;
  for (const auto& utt : corpus.utterances) {
    for (const auto& tok : utt.tokens) {
      auto value = extractor(tok);
      if (value && *value == feature) ++total;
    }
  }
  if (total == 0) throw InvalidArgument("feature unseen: '" + feature + "'");
  for (const auto& point : find_switch_points(corpus)) {
    if (!direction_matches(direction, point.direction)) continue;
    const auto& tok = corpus.utterances[point.utterance].tokens[point.position];
    auto value = extractor(tok);
    if (value && *value == feature) ++pre;
  }
  return static_cast<double>(pre) / static_cast<double>(total);
}

TriggerReport rank_triggers(const Corpus& corpus, const FeatureExtractor& extractor,
                            const std::string& feature_kind,
                            SwitchDirection direction, double threshold_fraction) {
  if (corpus.empty()) throw InvalidArgument("rank_triggers: empty corpus");
  if (threshold_fraction <= 0.0 || threshold_fraction > 1.0) {
    throw InvalidArgument("rank_triggers: threshold_fraction outside (0,1]");
  }
  FeatureCounts fc = count_features(corpus, extractor);
  TriggerReport report;
  report.feature_kind = feature_kind;
  report.direction = direction;
  report.threshold_fraction = threshold_fraction;
  report.total_features = fc.total_extracted;
  double min_total = threshold_fraction * static_cast<double>(fc.total_extracted);
  for (const auto& [value, row] : fc.rows) {
    if (static_cast<double>(row.total) >= min_total) report.rows.push_back(row);
  }
  std::stable_sort(report.rows.begin(), report.rows.end(),
                   [direction](const TriggerRow& a, const TriggerRow& b) {
                     double ra = a.rate(direction), rb = b.rate(direction);
                     if (ra != rb) return ra > rb;
                     if (a.total != b.total) return a.total > b.total;
                     return a.feature < b.feature;
                   });
  return report;
}

std::string trigger_report_tsv(const TriggerReport& report) {
  std::ostringstream out;
  out << "feature\ttotal\tpre_switch_man_en\tpre_switch_en_man\trate_man_en\t"
         "rate_en_man\n";
  out.precision(6);
  out << std::fixed;
  for (const auto& row : report.rows) {
    out << row.feature << '\t' << row.total << '\t' << row.pre_switch_man_en
        << '\t' << row.pre_switch_en_man << '\t'
        << row.rate(SwitchDirection::ManToEn) << '\t'
        << row.rate(SwitchDirection::EnToMan) << '\n';
  }
  return out.str();
}

}  // namespace csflm
