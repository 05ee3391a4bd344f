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

#ifndef CSFLM_PIPELINE_HPP
#define CSFLM_PIPELINE_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "csflm/lm.hpp"

namespace csflm {

// One named model of an experiment: an n-gram baseline, an FLM over a factor
// lattice, a built-in preset, or a spec file.
struct ModelSpec {
  std::string name;
  std::string kind;     // "ngram" | "flm"
  int order = 3;        // ngram
  std::string smoothing = "witten-bell";
  std::string factors;  // flm: comma-separated refs for a lattice
  std::string preset;   // flm: built-in preset name
  std::string spec_file;
};

struct ExperimentConfig {
  std::string config_dir;  // directory of the config file; resolves paths
  std::string generator_config;
  std::string corpus_file;
  std::string particles_file;
  std::string function_words_en;
  std::string function_words_man;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  std::vector<std::string> stages;
  std::string oc_strategy = "speaker";
  int brown_classes = 70;
  int embed_hidden = 16;
  int embed_epochs = 1;
  int embed_bptt = 4;
  int embed_kmeans_k = 40;
  double embed_coverage = 0.0;
  std::string interpolation_baseline;
  double grid_step = 0.01;
  std::vector<ModelSpec> models;

  // Checks stage ordering, dependencies and referenced paths.
  void validate() const;
};

ExperimentConfig read_experiment_config(const std::string& path);

struct StageStatus {
  std::string stage;
  bool cache_hit = false;
};

struct PipelineResult {
  std::string out_dir;
  std::vector<StageStatus> stages;
  std::vector<PplReport> reports;
};

// Executes the configured stages with content-addressed caching: a stage is
// skipped when its outputs exist and their recorded input hashes match. A
// manifest listing every artifact with its input hashes is written to
// <out_dir>/manifest.json. Stage failures abort with the stage named.
PipelineResult run_pipeline(const ExperimentConfig& config,
                            const std::string& out_dir_override = "");

// Comparison table of model x split perplexities with relative reduction
// against the named baseline model. Models must cover the same splits as the
// baseline. TSV columns: model, split, tokens, oov_events, ppl,
// rel_reduction_pct.
std::string report_summary_tsv(const std::vector<PplReport>& reports,
                               const std::string& baseline);
std::string report_summary_json(const std::vector<PplReport>& reports,
                                const std::string& baseline);

PplReport ppl_report_from_json_file(const std::string& path);

// FNV-1a over bytes; the pipeline's content-addressing hash.
std::uint64_t fnv1a64(const std::string& bytes);
std::string file_hash(const std::string& path);

}  // namespace csflm

#endif  // CSFLM_PIPELINE_HPP
