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

#ifndef CSFLM_ANALYSIS_HPP
#define CSFLM_ANALYSIS_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "csflm/types.hpp"

namespace csflm {

enum class SwitchDirection { ManToEn, EnToMan, Any };

const char* to_string(SwitchDirection d);
SwitchDirection switch_direction_from_string(const std::string& s);

// Maps a token to a feature value; nullopt excludes the token from the
// analysis (e.g. a missing factor).
using FeatureExtractor =
    std::function<std::optional<std::string>(const FactoredToken&)>;

FeatureExtractor factor_extractor(FactorKind kind);

// A code-switch point between MAN and EN. PART/OTHER tokens are transparent:
// the switch is detected between the nearest MAN/EN neighbours and attributed
// to the position directly before the language change, whatever its category.
struct SwitchPoint {
  std::size_t utterance;
  std::size_t position;  // token index the switch is attributed to
  SwitchDirection direction;
};

// All switch points of the corpus, within utterances only.
std::vector<SwitchPoint> find_switch_points(const Corpus& corpus);

// CS rate of one feature value (Eq. of occurrences preceding CS points over
// total occurrences). Throws InvalidArgument if the feature never occurs.
double cs_rate(const Corpus& corpus, const FeatureExtractor& extractor,
               const std::string& feature, SwitchDirection direction);

struct TriggerRow {
  std::string feature;
  std::int64_t total = 0;
  std::int64_t pre_switch_man_en = 0;
  std::int64_t pre_switch_en_man = 0;

  double rate(SwitchDirection d) const;
};

struct TriggerReport {
  std::string feature_kind;
  SwitchDirection direction = SwitchDirection::Any;
  double threshold_fraction = 0.0;
  std::int64_t total_features = 0;  // extracted occurrences before thresholding
  std::vector<TriggerRow> rows;
};

// Ranks feature values by CS rate in the requested direction, descending;
// ties broken by total count descending, then lexicographically. Values with
// total < threshold_fraction * (total extracted occurrences) are excluded.
TriggerReport rank_triggers(const Corpus& corpus, const FeatureExtractor& extractor,
                            const std::string& feature_kind,
                            SwitchDirection direction, double threshold_fraction);

// TSV with columns feature, total, pre_switch_man_en, pre_switch_en_man,
// rate_man_en, rate_en_man.
std::string trigger_report_tsv(const TriggerReport& report);

}  // namespace csflm

#endif  // CSFLM_ANALYSIS_HPP
