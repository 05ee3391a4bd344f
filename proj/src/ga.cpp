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

#include "csflm/ga.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "csflm/error.hpp"
#include "csflm/lm.hpp"
#include "csflm/rng.hpp"

namespace csflm {

namespace {

constexpr int kNumStrategies = 6;
constexpr int kNumSmoothings = 2;  // Witten-Bell, modified Kneser-Ney
const std::int64_t kTauMenu[] = {0, 1, 2, 4};
constexpr int kNumTaus = 4;

Combine strategy_of(int gene) {
  static constexpr Combine kAll[] = {Combine::FixedPath, Combine::Mean,
                                     Combine::Sum,       Combine::Product,
                                     Combine::Max,       Combine::CountSelect};
  return kAll[gene % kNumStrategies];
}

Smoothing smoothing_of(int gene) {
  return gene % kNumSmoothings == 0 ? Smoothing::WittenBell
                                    : Smoothing::KneserNeyMod;
}

// Per-subset gene block offset: mask genes first, then 3 genes per subset.
std::size_t subset_offset(std::size_t menu_size, unsigned subset_mask) {
  return menu_size + 3 * static_cast<std::size_t>(subset_mask);
}

}  // namespace

std::size_t genome_size(std::size_t menu_size) {
  return menu_size + 3 * (static_cast<std::size_t>(1) << menu_size);
}

Genome random_genome(std::size_t menu_size, Rng& rng) {
  Genome g(genome_size(menu_size));
  for (std::size_t i = 0; i < menu_size; ++i) {
    g[i] = static_cast<int>(rng.next_below(2));
  }
  for (unsigned m = 0; m < (1u << menu_size); ++m) {
    std::size_t at = subset_offset(menu_size, m);
    g[at] = static_cast<int>(rng.next_below(kNumStrategies));
    g[at + 1] = static_cast<int>(rng.next_below(kNumSmoothings));
    g[at + 2] = static_cast<int>(rng.next_below(kNumTaus));
  }
  return g;
}

FlmSpec decode_genome(const std::vector<FactorRef>& menu, const Genome& genome) {
  if (genome.size() != genome_size(menu.size())) {
    throw InvalidArgument("genome length does not match the factor menu");
  }
  std::vector<FactorRef> selected;
  std::vector<std::size_t> menu_index;  // selected position -> menu position
  for (std::size_t i = 0; i < menu.size(); ++i) {
    if (genome[i] % 2 == 1) {
      selected.push_back(menu[i]);
      menu_index.push_back(i);
    }
  }
  FlmSpec spec = FlmSpec::lattice(selected);
  for (auto& node : spec.nodes) {
    unsigned menu_mask = 0;
    for (int f : node.factors) {
      menu_mask |= 1u << menu_index[static_cast<std::size_t>(f)];
    }
    std::size_t at = subset_offset(menu.size(), menu_mask);
    node.combine = strategy_of(genome[at]);
    node.smoothing = smoothing_of(genome[at + 1]);
    node.tau = kTauMenu[genome[at + 2] % kNumTaus];
  }
  spec.validate();
  return spec;
}

void GaConfig::validate() const {
  if (population < 1) throw InvalidArgument("GA population must be >= 1");
  if (generations < 1) throw InvalidArgument("GA generations must be >= 1");
  if (crossover_rate < 0.0 || crossover_rate > 1.0 || mutation_rate < 0.0 ||
      mutation_rate > 1.0) {
    throw InvalidArgument("GA rates must lie in [0,1]");
  }
  if (tournament < 1) throw InvalidArgument("GA tournament size must be >= 1");
  if (elitism < 0 || elitism > population) {
    throw InvalidArgument("GA elitism must lie in [0, population]");
  }
}

namespace {

// Dev-perplexity fitness with a cache keyed by the exact gene string.
class FitnessCache {
 public:
  FitnessCache(const Corpus& corpus, Split train, Split dev)
      : corpus_(corpus), train_(train), dev_(dev) {}

  double evaluate(const std::vector<FactorRef>& menu, const Genome& genome) {
    std::string key(reinterpret_cast<const char*>(genome.data()),
                    genome.size() * sizeof(int));
    auto it = cache_.find(key);
    if (it != cache_.end()) {
      ++hits_;
      return it->second;
    }
    FlmSpec spec = decode_genome(menu, genome);
    FlmModel model = FlmModel::train(corpus_, train_, spec);
    double ppl = perplexity(model, corpus_, dev_, "ga").ppl;
    cache_.emplace(std::move(key), ppl);
    ++misses_;
    return ppl;
  }

  std::int64_t hits() const { return hits_; }
  std::int64_t misses() const { return misses_; }

 private:
  const Corpus& corpus_;
  Split train_;
  Split dev_;
  std::map<std::string, double> cache_;
  std::int64_t hits_ = 0;
  std::int64_t misses_ = 0;
};

}  // namespace

GaResult ga_search(const Corpus& corpus, Split train_split, Split dev_split,
                   const std::vector<FactorRef>& menu, const GaConfig& config) {
  config.validate();
  if (menu.empty()) throw InvalidArgument("ga_search: empty factor menu");
  std::vector<FactorRef> canonical = menu;
  std::sort(canonical.begin(), canonical.end(), FactorRef::older);
  if (corpus.split_indices(train_split).empty() ||
      corpus.split_indices(dev_split).empty()) {
    throw InvalidArgument("ga_search: empty split");
  }

  Rng rng(config.seed);
  FitnessCache fitness(corpus, train_split, dev_split);
  std::vector<Genome> population;
  for (int i = 0; i < config.population; ++i) {
    population.push_back(random_genome(canonical.size(), rng));
  }

  GaResult result;
  Genome best_genome;
  double best_fitness = 1e300;
  for (int gen = 0; gen < config.generations; ++gen) {
    std::vector<double> scores(population.size());
    double gen_best = 1e300, gen_sum = 0.0;
    for (std::size_t i = 0; i < population.size(); ++i) {
      scores[i] = fitness.evaluate(canonical, population[i]);
      gen_sum += scores[i];
      gen_best = std::min(gen_best, scores[i]);
      if (scores[i] < best_fitness) {
        best_fitness = scores[i];
        best_genome = population[i];
      }
    }
    result.trace.push_back({gen, best_fitness, gen_best,
                            gen_sum / static_cast<double>(population.size())});
    if (gen + 1 == config.generations) break;

    // Elites by fitness, ties by population index.
    std::vector<std::size_t> order(population.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&scores](std::size_t a, std::size_t b) {
      return scores[a] < scores[b];
    });
    std::vector<Genome> next;
    for (int e = 0; e < config.elitism && e < static_cast<int>(order.size()); ++e) {
      next.push_back(population[order[static_cast<std::size_t>(e)]]);
    }
    auto select = [&]() -> const Genome& {
      std::size_t best = rng.next_index(population.size());
      for (int t = 1; t < config.tournament; ++t) {
        std::size_t challenger = rng.next_index(population.size());
        if (scores[challenger] < scores[best]) best = challenger;
      }
      return population[best];
    };
    while (next.size() < population.size()) {
      Genome a = select();
      Genome b = select();
      if (rng.next_double() < config.crossover_rate && a.size() > 1) {
        std::size_t point = 1 + rng.next_index(a.size() - 1);
        for (std::size_t i = point; i < a.size(); ++i) std::swap(a[i], b[i]);
      }
      auto gene_range = [&canonical](std::size_t i) -> std::uint64_t {
        if (i < canonical.size()) return 2;
        switch ((i - canonical.size()) % 3) {
          case 0:
            return kNumStrategies;
          case 1:
            return kNumSmoothings;
          default:
            return kNumTaus;
        }
      };
      auto mutate = [&config, &rng, &gene_range](Genome& g) {
        for (std::size_t i = 0; i < g.size(); ++i) {
          if (rng.next_double() < config.mutation_rate) {
            g[i] = static_cast<int>(rng.next_below(gene_range(i)));
          }
        }
      };
      mutate(a);
      next.push_back(std::move(a));
      if (next.size() < population.size()) {
        mutate(b);
        next.push_back(std::move(b));
      }
    }
    population = std::move(next);
  }
  result.best_genome = best_genome;
  result.best_fitness = best_fitness;
  result.best_spec = decode_genome(canonical, best_genome);
  result.evaluations = fitness.misses();
  result.cache_hits = fitness.hits();
  return result;
}

std::string ga_trace_csv(const GaResult& result) {
  std::ostringstream out;
  out.precision(17);
  out << "generation,best_ever,generation_best,generation_mean\n";
  for (const auto& row : result.trace) {
    out << row.generation << ',' << row.best_ever << ',' << row.generation_best
        << ',' << row.generation_mean << '\n';
  }
  return out.str();
}

namespace {

// All single-parameter neighbours of a spec, in a fixed scan order: per-node
// option changes first, then menu-factor toggles rebuilt as lattices with
// options carried over by factor subset.
std::vector<FlmSpec> neighbours(const FlmSpec& spec,
                                const std::vector<FactorRef>& menu) {
  std::vector<FlmSpec> out;
  static constexpr Combine kStrategies[] = {Combine::FixedPath, Combine::Mean,
                                            Combine::Sum,       Combine::Product,
                                            Combine::Max,       Combine::CountSelect};
  static constexpr Smoothing kSmoothings[] = {Smoothing::WittenBell,
                                              Smoothing::KneserNeyMod};
  for (std::size_t n = 0; n < spec.nodes.size(); ++n) {
    for (Combine c : kStrategies) {
      if (c == spec.nodes[n].combine) continue;
      FlmSpec alt = spec;
      alt.nodes[n].combine = c;
      out.push_back(std::move(alt));
    }
    for (Smoothing s : kSmoothings) {
      if (s == spec.nodes[n].smoothing) continue;
      FlmSpec alt = spec;
      alt.nodes[n].smoothing = s;
      out.push_back(std::move(alt));
    }
    for (std::int64_t tau : kTauMenu) {
      if (tau == spec.nodes[n].tau) continue;
      FlmSpec alt = spec;
      alt.nodes[n].tau = tau;
      out.push_back(std::move(alt));
    }
  }
  for (const FactorRef& candidate : menu) {
    bool present = std::find(spec.factors.begin(), spec.factors.end(), candidate) !=
                   spec.factors.end();
    std::vector<FactorRef> toggled;
    for (const auto& f : spec.factors) {
      if (!(f == candidate)) toggled.push_back(f);
    }
    if (!present) toggled.push_back(candidate);
    FlmSpec alt = FlmSpec::lattice(toggled);
    // Carry node options over where the factor subset survived.
    for (auto& node : alt.nodes) {
      std::vector<FactorRef> refs;
      for (int f : node.factors) {
        refs.push_back(alt.factors[static_cast<std::size_t>(f)]);
      }
      for (std::size_t old = 0; old < spec.nodes.size(); ++old) {
        std::vector<FactorRef> old_refs;
        for (int f : spec.nodes[old].factors) {
          old_refs.push_back(spec.factors[static_cast<std::size_t>(f)]);
        }
        if (old_refs == refs) {
          node.combine = spec.nodes[old].combine;
          node.smoothing = spec.nodes[old].smoothing;
          node.tau = spec.nodes[old].tau;
          break;
        }
      }
    }
    out.push_back(std::move(alt));
  }
  return out;
}

}  // namespace

HillClimbResult hill_climb(const FlmSpec& spec, const Corpus& corpus,
                           Split train_split, Split dev_split,
                           const std::vector<FactorRef>& menu) {
  spec.validate();
  std::map<std::string, double> cache;
  auto evaluate = [&](const FlmSpec& s) {
    std::string key = s.to_text();
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    FlmModel model = FlmModel::train(corpus, train_split, s);
    double ppl = perplexity(model, corpus, dev_split, "hill").ppl;
    cache.emplace(std::move(key), ppl);
    return ppl;
  };

  HillClimbResult result;
  result.spec = spec;
  result.dev_ppl = evaluate(spec);
  for (;;) {
    double best_ppl = result.dev_ppl;
    const FlmSpec* best = nullptr;
    std::vector<FlmSpec> candidates = neighbours(result.spec, menu);
    for (const auto& candidate : candidates) {
      double ppl = evaluate(candidate);
      if (ppl < best_ppl) {
        best_ppl = ppl;
        best = &candidate;
      }
    }
    if (!best) break;
    result.spec = *best;
    result.dev_ppl = best_ppl;
    ++result.steps;
  }
  return result;
}

}  // namespace csflm
