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

#include "csflm.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include "csflm/analysis.hpp"
#include "csflm/annotate.hpp"
#include "csflm/brown.hpp"
#include "csflm/cluster.hpp"
#include "csflm/corpus.hpp"
#include "csflm/error.hpp"
#include "csflm/flm.hpp"
#include "csflm/ga.hpp"
#include "csflm/generator.hpp"
#include "csflm/model_io.hpp"
#include "csflm/ngram.hpp"
#include "csflm/pipeline.hpp"
#include "csflm/rnnlm.hpp"
#include "json.hpp"

struct csflm_corpus {
  csflm::Corpus corpus;
};
struct csflm_clusters {
  csflm::ClusterAssignment clusters;
};
struct csflm_embeddings {
  csflm::EmbeddingMatrix embeddings;
};
struct csflm_rnnlm {
  csflm::RnnLm model;
  explicit csflm_rnnlm(csflm::RnnLm m) : model(std::move(m)) {}
};
struct csflm_model {
  std::shared_ptr<csflm::LanguageModel> model;
};

namespace {

thread_local std::string g_last_error;

template <typename F>
csflm_status guarded(F&& fn) {
  try {
    fn();
    return CSFLM_OK;
  } catch (const csflm::ParseError& e) {
    g_last_error = e.what();
    return CSFLM_ERR_PARSE;
  } catch (const csflm::InvalidArgument& e) {
    g_last_error = e.what();
    return CSFLM_ERR_INVALID_ARGUMENT;
  } catch (const csflm::IoError& e) {
    g_last_error = e.what();
    return CSFLM_ERR_IO;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return CSFLM_ERR_RUNTIME;
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require(bool ok, const char* what) {
  if (!ok) throw csflm::InvalidArgument(what);
}

csflm::WordSet load_optional_words(const char* path) {
  return path == nullptr ? csflm::WordSet{} : csflm::read_word_list(path);
}

csflm::FunctionWordLists load_function_words(const char* en, const char* man) {
  csflm::FunctionWordLists lists;
  lists.en = load_optional_words(en);
  lists.man = load_optional_words(man);
  return lists;
}

csflm::FactorKind factor_kind_arg(const char* factor) {
  require(factor != nullptr, "factor must not be null");
  std::string f = factor;
  if (f == "word") return csflm::FactorKind::Word;
  if (f == "lid") return csflm::FactorKind::Lid;
  if (f == "pos") return csflm::FactorKind::Pos;
  if (f == "brown") return csflm::FactorKind::Brown;
  if (f == "oc") return csflm::FactorKind::Oc;
  if (f == "occ") return csflm::FactorKind::Occ;
  throw csflm::InvalidArgument("unknown factor '" + f + "'");
}

std::vector<csflm::FactorRef> factor_csv_arg(const char* csv) {
  require(csv != nullptr, "factor list must not be null");
  std::vector<csflm::FactorRef> out;
  std::istringstream in(csv);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(csflm::FactorRef::parse(item));
  }
  require(!out.empty(), "factor list must not be empty");
  return out;
}

}  // namespace

extern "C" {

const char* csflm_version(void) { return csflm::kVersion; }

const char* csflm_last_error(void) { return g_last_error.c_str(); }

void csflm_string_free(char* s) { std::free(s); }

/* ----- corpus ---------------------------------------------------------- */

csflm_status csflm_corpus_read(const char* path, csflm_corpus** out) {
  return guarded([&] {
    require(path && out, "path and out must not be null");
    *out = new csflm_corpus{csflm::read_factored(path)};
  });
}

csflm_status csflm_corpus_write(const csflm_corpus* corpus, const char* path) {
  return guarded([&] {
    require(corpus && path, "corpus and path must not be null");
    csflm::write_factored(corpus->corpus, path);
  });
}

csflm_status csflm_corpus_generate(const char* config_path, int64_t seed_override,
                                   csflm_corpus** out) {
  return guarded([&] {
    require(config_path && out, "config_path and out must not be null");
    csflm::GeneratorConfig cfg = csflm::read_generator_config(config_path);
    if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
    *out = new csflm_corpus{csflm::generate_synthetic_cs(cfg).corpus};
  });
}

csflm_status csflm_corpus_generate_full(const char* config_path,
                                        int64_t seed_override,
                                        const char* corpus_out,
                                        const char* particles_out,
                                        const char* function_words_en_out,
                                        const char* function_words_man_out) {
  return guarded([&] {
    require(config_path && corpus_out, "config_path and corpus_out must not be null");
    csflm::GeneratorConfig cfg = csflm::read_generator_config(config_path);
    if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
    csflm::SyntheticCorpus synth = csflm::generate_synthetic_cs(cfg);
    csflm::write_factored(synth.corpus, corpus_out);
    if (particles_out) csflm::write_word_list(synth.particle_lexicon, particles_out);
    if (function_words_en_out) {
      csflm::write_word_list(synth.function_words_en, function_words_en_out);
    }
    if (function_words_man_out) {
      csflm::write_word_list(synth.function_words_man, function_words_man_out);
    }
  });
}

csflm_status csflm_corpus_stats(const csflm_corpus* corpus, char** json_out) {
  return guarded([&] {
    require(corpus && json_out, "corpus and json_out must not be null");
    nlohmann::json stats;
    stats["utterances"] = corpus->corpus.size();
    stats["tokens"] = corpus->corpus.token_count();
    for (csflm::Split split :
         {csflm::Split::Train, csflm::Split::Dev, csflm::Split::Eval}) {
      nlohmann::json part;
      part["utterances"] = corpus->corpus.split_indices(split).size();
      part["tokens"] = corpus->corpus.token_count(split);
      stats["splits"][csflm::to_string(split)] = part;
    }
    stats["cs_points"] = csflm::find_switch_points(corpus->corpus).size();
    *json_out = dup_string(stats.dump(2));
  });
}

csflm_status csflm_corpus_assign_lids(csflm_corpus* corpus,
                                      const char* particles_path) {
  return guarded([&] {
    require(corpus != nullptr, "corpus must not be null");
    csflm::assign_lids(corpus->corpus, load_optional_words(particles_path));
  });
}

csflm_status csflm_corpus_annotate_pos(csflm_corpus* corpus,
                                       const char* tagger_train_path) {
  return guarded([&] {
    require(corpus && tagger_train_path, "corpus and tagger_train_path required");
    csflm::Corpus train = csflm::read_factored(tagger_train_path);
    csflm::Tagger matrix = csflm::lexicon_tagger(train, csflm::LanguageTag::Man);
    csflm::Tagger embedded = csflm::lexicon_tagger(train, csflm::LanguageTag::En);
    csflm::tag_pos_cs(corpus->corpus, matrix, embedded);
  });
}

csflm_status csflm_corpus_annotate_oc(csflm_corpus* corpus, const char* strategy,
                                      const char* function_words_en,
                                      const char* function_words_man) {
  return guarded([&] {
    require(corpus && strategy, "corpus and strategy must not be null");
    corpus->corpus = csflm::annotate_oc(
        corpus->corpus, csflm::OcStrategy::from_string(strategy),
        load_function_words(function_words_en, function_words_man));
  });
}

csflm_status csflm_corpus_map_clusters(csflm_corpus* corpus,
                                       const csflm_clusters* clusters,
                                       const char* slot) {
  return guarded([&] {
    require(corpus && clusters && slot, "corpus, clusters and slot required");
    std::string s = slot;
    csflm::FactorKind kind;
    if (s == "C") kind = csflm::FactorKind::Brown;
    else if (s == "OCC") kind = csflm::FactorKind::Occ;
    else throw csflm::InvalidArgument("slot must be C or OCC");
    corpus->corpus =
        csflm::map_cluster_factor(corpus->corpus, clusters->clusters, kind);
  });
}

void csflm_corpus_free(csflm_corpus* corpus) { delete corpus; }

/* ----- analysis ---------------------------------------------------------- */

csflm_status csflm_analyze_cs(const csflm_corpus* corpus, const char* factor,
                              const char* direction, double threshold_fraction,
                              char** tsv_out) {
  return guarded([&] {
    require(corpus && direction && tsv_out, "corpus, direction, tsv_out required");
    csflm::FactorKind kind = factor_kind_arg(factor);
    csflm::TriggerReport report = csflm::rank_triggers(
        corpus->corpus, csflm::factor_extractor(kind), factor,
        csflm::switch_direction_from_string(direction), threshold_fraction);
    *tsv_out = dup_string(csflm::trigger_report_tsv(report));
  });
}

/* ----- clusters ---------------------------------------------------------- */

csflm_status csflm_clusters_load(const char* path, csflm_clusters** out) {
  return guarded([&] {
    require(path && out, "path and out must not be null");
    *out = new csflm_clusters{csflm::read_cluster_map(path)};
  });
}

csflm_status csflm_clusters_save(const csflm_clusters* clusters, const char* path) {
  return guarded([&] {
    require(clusters && path, "clusters and path must not be null");
    csflm::write_cluster_map(clusters->clusters, path);
  });
}

csflm_status csflm_brown_cluster(const csflm_corpus* corpus, int classes,
                                 int open_class_only, const char* function_words_en,
                                 const char* function_words_man,
                                 csflm_clusters** out) {
  return guarded([&] {
    require(corpus && out, "corpus and out must not be null");
    csflm::Corpus input = corpus->corpus;
    if (open_class_only) {
      input = csflm::restrict_to_open_class(
          input, load_function_words(function_words_en, function_words_man));
      *out = new csflm_clusters{csflm::brown_cluster(input, classes)};
      (*out)->clusters.set_source("oc-brown");
      return;
    }
    *out = new csflm_clusters{csflm::brown_cluster(input, classes)};
  });
}

void csflm_clusters_free(csflm_clusters* clusters) { delete clusters; }

/* ----- embeddings / rnnlm -------------------------------------------------- */

csflm_status csflm_embeddings_load(const char* path, csflm_embeddings** out) {
  return guarded([&] {
    require(path && out, "path and out must not be null");
    *out = new csflm_embeddings{csflm::load_embeddings(path)};
  });
}

csflm_status csflm_embeddings_save(const csflm_embeddings* embeddings,
                                   const char* path) {
  return guarded([&] {
    require(embeddings && path, "embeddings and path must not be null");
    csflm::save_embeddings(embeddings->embeddings, path);
  });
}

void csflm_embeddings_free(csflm_embeddings* embeddings) { delete embeddings; }

csflm_status csflm_rnnlm_train(const char* text_path, const char* dev_path,
                               int hidden, int bptt_steps, int epochs,
                               double learning_rate, uint64_t seed,
                               csflm_rnnlm** out) {
  return guarded([&] {
    require(text_path && out, "text_path and out must not be null");
    csflm::TextLines text = csflm::read_text_lines(text_path);
    csflm::TextLines dev;
    if (dev_path) dev = csflm::read_text_lines(dev_path);
    csflm::RnnLm::TrainConfig cfg;
    cfg.hidden = hidden;
    cfg.bptt_steps = bptt_steps;
    cfg.epochs = epochs;
    cfg.learning_rate = learning_rate;
    cfg.seed = seed;
    *out = new csflm_rnnlm(
        csflm::RnnLm::train(text, cfg, dev_path ? &dev : nullptr));
  });
}

csflm_status csflm_rnnlm_save(const csflm_rnnlm* model, const char* path) {
  return guarded([&] {
    require(model && path, "model and path must not be null");
    model->model.save(std::string(path));
  });
}

csflm_status csflm_rnnlm_load(const char* path, csflm_rnnlm** out) {
  return guarded([&] {
    require(path && out, "path and out must not be null");
    *out = new csflm_rnnlm(csflm::RnnLm::load_file(path));
  });
}

csflm_status csflm_rnnlm_perplexity(const csflm_rnnlm* model, const char* text_path,
                                    double* ppl_out) {
  return guarded([&] {
    require(model && text_path && ppl_out, "model, text_path, ppl_out required");
    *ppl_out = model->model.perplexity(csflm::read_text_lines(text_path));
  });
}

csflm_status csflm_rnnlm_embeddings(const csflm_rnnlm* model,
                                    csflm_embeddings** out) {
  return guarded([&] {
    require(model && out, "model and out must not be null");
    *out = new csflm_embeddings{model->model.extract_all_embeddings()};
  });
}

void csflm_rnnlm_free(csflm_rnnlm* model) { delete model; }

csflm_status csflm_cluster_embeddings(const csflm_embeddings* embeddings,
                                      const char* method, int k, int neighbors,
                                      uint64_t seed, csflm_clusters** out) {
  return guarded([&] {
    require(embeddings && method && out, "embeddings, method, out required");
    std::string m = method;
    if (m == "kmeans") {
      *out = new csflm_clusters{csflm::kmeans(embeddings->embeddings, k, seed)};
    } else if (m == "spectral") {
      *out = new csflm_clusters{
          csflm::spectral_cluster(embeddings->embeddings, k, neighbors, seed)};
    } else {
      throw csflm::InvalidArgument("method must be kmeans or spectral");
    }
  });
}

csflm_status csflm_cluster_validity(const csflm_embeddings* embeddings,
                                    const csflm_clusters* clusters, double* intra,
                                    double* inter, double* ratio) {
  return guarded([&] {
    require(embeddings && clusters && intra && inter && ratio,
            "all arguments required");
    csflm::ValidityReport report =
        csflm::cluster_validity(embeddings->embeddings, clusters->clusters);
    *intra = report.intra;
    *inter = report.inter;
    *ratio = report.ratio;
  });
}

/* ----- language models ------------------------------------------------------ */

csflm_status csflm_train_ngram(const csflm_corpus* corpus, int order,
                               const char* smoothing, csflm_model** out) {
  return guarded([&] {
    require(corpus && smoothing && out, "corpus, smoothing, out required");
    *out = new csflm_model{std::make_shared<csflm::NgramModel>(
        csflm::NgramModel::train(corpus->corpus, csflm::Split::Train, order,
                                 csflm::smoothing_from_string(smoothing)))};
  });
}

csflm_status csflm_train_flm(const csflm_corpus* corpus, const char* spec_path,
                             const char* preset, const char* factors_csv,
                             csflm_model** out) {
  return guarded([&] {
    require(corpus && out, "corpus and out must not be null");
    int sources = (spec_path != nullptr) + (preset != nullptr) +
                  (factors_csv != nullptr);
    require(sources == 1, "exactly one of spec_path/preset/factors required");
    csflm::FlmSpec spec;
    if (spec_path) spec = csflm::FlmSpec::parse_file(spec_path);
    else if (preset) spec = csflm::FlmSpec::preset(preset);
    else spec = csflm::FlmSpec::lattice(factor_csv_arg(factors_csv));
    *out = new csflm_model{std::make_shared<csflm::FlmModel>(
        csflm::FlmModel::train(corpus->corpus, csflm::Split::Train, spec))};
  });
}

csflm_status csflm_model_save(const csflm_model* model, const char* path) {
  return guarded([&] {
    require(model && path, "model and path must not be null");
    csflm::save_model_file(*model->model, path);
  });
}

csflm_status csflm_model_load(const char* path, csflm_model** out) {
  return guarded([&] {
    require(path && out, "path and out must not be null");
    *out = new csflm_model{csflm::load_model_file(path)};
  });
}

csflm_status csflm_model_perplexity(const csflm_model* model,
                                    const csflm_corpus* corpus, const char* split,
                                    const char* model_name,
                                    char** report_json_out) {
  return guarded([&] {
    require(model && corpus && split && report_json_out,
            "model, corpus, split, report_json_out required");
    csflm::PplReport report = csflm::perplexity(
        *model->model, corpus->corpus, csflm::split_from_string(split),
        model_name ? model_name : "model");
    *report_json_out = dup_string(csflm::ppl_report_json(report));
  });
}

csflm_status csflm_interpolate(const csflm_model* const* models,
                               const double* weights, size_t n,
                               csflm_model** out) {
  return guarded([&] {
    require(models && weights && out && n > 0, "models, weights, out required");
    std::vector<std::shared_ptr<const csflm::LanguageModel>> components;
    std::vector<double> w(weights, weights + n);
    for (size_t i = 0; i < n; ++i) {
      require(models[i] != nullptr, "model handles must not be null");
      components.push_back(models[i]->model);
    }
    *out = new csflm_model{csflm::interpolate(std::move(components), std::move(w))};
  });
}

csflm_status csflm_tune_weights(const csflm_model* const* models, size_t n,
                                const csflm_corpus* corpus, const char* split,
                                double grid_step, double* weights_out) {
  return guarded([&] {
    require(models && corpus && split && weights_out && n > 0,
            "models, corpus, split, weights_out required");
    std::vector<std::shared_ptr<const csflm::LanguageModel>> components;
    for (size_t i = 0; i < n; ++i) {
      require(models[i] != nullptr, "model handles must not be null");
      components.push_back(models[i]->model);
    }
    std::vector<double> weights = csflm::tune_weights(
        components, corpus->corpus, csflm::split_from_string(split), grid_step);
    for (size_t i = 0; i < n; ++i) weights_out[i] = weights[i];
  });
}

void csflm_model_free(csflm_model* model) { delete model; }

/* ----- structure search ------------------------------------------------------ */

csflm_status csflm_ga_search(const csflm_corpus* corpus, const char* factors_csv,
                             int population, int generations, double crossover_rate,
                             double mutation_rate, int tournament, int elitism,
                             uint64_t seed, char** spec_text_out,
                             char** trace_csv_out) {
  return guarded([&] {
    require(corpus && spec_text_out, "corpus and spec_text_out required");
    csflm::GaConfig cfg;
    cfg.population = population;
    cfg.generations = generations;
    cfg.crossover_rate = crossover_rate;
    cfg.mutation_rate = mutation_rate;
    cfg.tournament = tournament;
    cfg.elitism = elitism;
    cfg.seed = seed;
    csflm::GaResult result =
        csflm::ga_search(corpus->corpus, csflm::Split::Train, csflm::Split::Dev,
                         factor_csv_arg(factors_csv), cfg);
    *spec_text_out = dup_string(result.best_spec.to_text());
    if (trace_csv_out) *trace_csv_out = dup_string(csflm::ga_trace_csv(result));
  });
}

csflm_status csflm_hill_climb(const csflm_corpus* corpus, const char* spec_path,
                              const char* factors_csv, char** spec_text_out,
                              double* dev_ppl_out) {
  return guarded([&] {
    require(corpus && spec_path && spec_text_out,
            "corpus, spec_path, spec_text_out required");
    csflm::FlmSpec spec = csflm::FlmSpec::parse_file(spec_path);
    csflm::HillClimbResult result =
        csflm::hill_climb(spec, corpus->corpus, csflm::Split::Train,
                          csflm::Split::Dev, factor_csv_arg(factors_csv));
    *spec_text_out = dup_string(result.spec.to_text());
    if (dev_ppl_out) *dev_ppl_out = result.dev_ppl;
  });
}

/* ----- pipeline ---------------------------------------------------------------- */

csflm_status csflm_run_pipeline(const char* config_path, const char* out_dir,
                                char** stages_json_out) {
  return guarded([&] {
    require(config_path != nullptr, "config_path must not be null");
    csflm::ExperimentConfig cfg = csflm::read_experiment_config(config_path);
    csflm::PipelineResult result =
        csflm::run_pipeline(cfg, out_dir ? out_dir : "");
    if (stages_json_out) {
      nlohmann::json stages = nlohmann::json::array();
      for (const auto& stage : result.stages) {
        stages.push_back({{"stage", stage.stage}, {"cache_hit", stage.cache_hit}});
      }
      nlohmann::json root;
      root["out_dir"] = result.out_dir;
      root["stages"] = stages;
      *stages_json_out = dup_string(root.dump(2));
    }
  });
}

csflm_status csflm_report_summary(const char* const* report_paths, size_t n,
                                  const char* baseline, char** tsv_out,
                                  char** json_out) {
  return guarded([&] {
    require(report_paths && baseline && n > 0, "report_paths and baseline required");
    std::vector<csflm::PplReport> reports;
    for (size_t i = 0; i < n; ++i) {
      reports.push_back(csflm::ppl_report_from_json_file(report_paths[i]));
    }
    if (tsv_out) *tsv_out = dup_string(csflm::report_summary_tsv(reports, baseline));
    if (json_out) {
      *json_out = dup_string(csflm::report_summary_json(reports, baseline));
    }
  });
}

}  // extern "C"
