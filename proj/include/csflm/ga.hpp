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

#ifndef CSFLM_GA_HPP
#define CSFLM_GA_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "csflm/flm.hpp"

namespace csflm {

// Integer gene string encoding an FLM structure over a factor menu: one mask
// gene per menu factor plus, for every subset of the menu, a combination
// strategy, a smoothing choice and a backoff threshold from a small menu.
// Every gene string decodes to a valid spec (the full backoff lattice over
// the selected factors), so no repair penalty is needed.
using Genome = std::vector<int>;

struct GaConfig {
  int population = 30;
  int generations = 20;
  double crossover_rate = 0.9;
  double mutation_rate = 0.02;  // per gene
  int tournament = 3;
  int elitism = 2;
  std::uint64_t seed = 1;

  void validate() const;
};

struct GenerationStats {
  int generation = 0;
  double best_ever = 0.0;
  double generation_best = 0.0;
  double generation_mean = 0.0;
};

struct GaResult {
  FlmSpec best_spec;
  Genome best_genome;
  double best_fitness = 0.0;  // dev perplexity, lower is better
  std::vector<GenerationStats> trace;
  std::int64_t evaluations = 0;  // fitness computations (cache misses)
  std::int64_t cache_hits = 0;
};

// Gene vector length for a menu of the given size.
std::size_t genome_size(std::size_t menu_size);

// Uniformly random genome over the gene ranges.
Genome random_genome(std::size_t menu_size, class Rng& rng);

// Decodes a genome against the (canonicalized) factor menu.
FlmSpec decode_genome(const std::vector<FactorRef>& menu, const Genome& genome);

// Genetic search over FLM structures minimizing dev-split perplexity.
// Deterministic under a fixed seed; duplicate genomes hit a fitness cache.
GaResult ga_search(const Corpus& corpus, Split train_split, Split dev_split,
                   const std::vector<FactorRef>& menu, const GaConfig& config);

// CSV trace: generation,best_ever,generation_best,generation_mean.
std::string ga_trace_csv(const GaResult& result);

struct HillClimbResult {
  FlmSpec spec;
  double dev_ppl = 0.0;
  int steps = 0;  // accepted improvements
};

// Single-parameter refinement: repeatedly tries every one-option node change
// and every menu-factor toggle, accepts the best strictly improving change
// and stops at a local optimum. Deterministic scan order.
HillClimbResult hill_climb(const FlmSpec& spec, const Corpus& corpus,
                           Split train_split, Split dev_split,
                           const std::vector<FactorRef>& menu);

}  // namespace csflm

#endif  // CSFLM_GA_HPP
