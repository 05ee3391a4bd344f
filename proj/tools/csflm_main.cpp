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

// Command-line front end. Everything here goes through the shared-library C
// API in csflm.h; no internal headers are used.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "csflm.h"

namespace {

int fail(csflm_status status) {
  std::fprintf(stderr, "csflm: error: %s\n", csflm_last_error());
  return status == CSFLM_ERR_RUNTIME ? 1 : 2;
}

#define TRY(call)                                  \
  do {                                             \
    csflm_status status__ = (call);                \
    if (status__ != CSFLM_OK) return fail(status__); \
  } while (0)

struct StringOut {
  char* value = nullptr;
  ~StringOut() { csflm_string_free(value); }
};

using CorpusPtr = std::unique_ptr<csflm_corpus, decltype(&csflm_corpus_free)>;
using ClustersPtr = std::unique_ptr<csflm_clusters, decltype(&csflm_clusters_free)>;
using EmbeddingsPtr =
    std::unique_ptr<csflm_embeddings, decltype(&csflm_embeddings_free)>;
using RnnlmPtr = std::unique_ptr<csflm_rnnlm, decltype(&csflm_rnnlm_free)>;
using ModelPtr = std::unique_ptr<csflm_model, decltype(&csflm_model_free)>;

int write_or_print(const std::string& out_path, const char* content) {
  if (out_path.empty()) {
    std::cout << content;
    return 0;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) {
    std::fprintf(stderr, "csflm: error: cannot write '%s'\n", out_path.c_str());
    return 2;
  }
  out << content;
  return 0;
}

std::vector<std::string> split_csv(const std::string& csv) {
  std::vector<std::string> out;
  std::istringstream in(csv);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// "W,P,C" and "W(-1),P(-2)" are both accepted; bare kinds mean lag -1.
std::string normalize_factors(const std::string& csv) {
  std::string out;
  for (const auto& item : split_csv(csv)) {
    if (!out.empty()) out += ',';
    out += item.find('(') == std::string::npos ? item + "(-1)" : item;
  }
  return out;
}

const char* opt(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"csflm: factored language modeling for code-switching text"};
  app.require_subcommand(1);
  app.set_version_flag("--version", []() { return std::string(csflm_version()); });

  // generate ----------------------------------------------------------------
  auto* generate = app.add_subcommand("generate", "Generate a synthetic CS corpus");
  std::string gen_config, gen_out, gen_particles, gen_fw_en, gen_fw_man;
  std::int64_t gen_seed = -1;
  bool gen_stats = false;
  generate->add_option("--config", gen_config, "Generator config file")->required();
  generate->add_option("--out", gen_out, "Output factored corpus")->required();
  generate->add_option("--seed", gen_seed, "Seed override (default: config seed)");
  generate->add_option("--particles-out", gen_particles, "Particle lexicon output");
  generate->add_option("--function-words-en-out", gen_fw_en,
                       "English function-word list output");
  generate->add_option("--function-words-man-out", gen_fw_man,
                       "Mandarin function-word list output");
  generate->add_flag("--stats", gen_stats, "Print corpus statistics as JSON");

  // annotate ----------------------------------------------------------------
  auto* annotate = app.add_subcommand("annotate", "Add factors to a corpus");
  std::string ann_corpus, ann_out, ann_particles, ann_pos_train, ann_oc;
  std::string ann_fw_en, ann_fw_man;
  std::vector<std::string> ann_maps;
  bool ann_lid = false;
  annotate->add_option("--corpus", ann_corpus, "Input factored corpus")->required();
  annotate->add_option("--out", ann_out, "Output factored corpus")->required();
  annotate->add_flag("--lid", ann_lid, "Assign language tags by script");
  annotate->add_option("--particles", ann_particles, "Particle lexicon for --lid");
  annotate->add_option("--pos-train", ann_pos_train,
                       "Tagged factored file; runs the CS POS tagger cascade");
  annotate->add_option("--oc", ann_oc,
                       "Open-class factor strategy: sentence|speaker|window:N");
  annotate->add_option("--function-words-en", ann_fw_en, "EN function words");
  annotate->add_option("--function-words-man", ann_fw_man, "MAN function words");
  annotate->add_option("--map-cluster", ann_maps,
                       "FILE:SLOT with SLOT C or OCC (repeatable)");

  // analyze-cs ----------------------------------------------------------------
  auto* analyze = app.add_subcommand("analyze-cs", "Rank trigger features by CS rate");
  std::string cs_corpus, cs_factor = "word", cs_direction = "any", cs_out;
  double cs_threshold = 0.002;
  analyze->add_option("--corpus", cs_corpus, "Input factored corpus")->required();
  analyze->add_option("--factor", cs_factor, "word|lid|pos|brown|oc|occ");
  analyze->add_option("--direction", cs_direction, "any|man-to-en|en-to-man");
  analyze->add_option("--threshold", cs_threshold,
                      "Minimum share of extracted occurrences");
  analyze->add_option("--out", cs_out, "Report TSV (default: stdout)");

  // brown-cluster ----------------------------------------------------------------
  auto* brown = app.add_subcommand("brown-cluster", "Greedy Brown word clustering");
  std::string br_corpus, br_out, br_fw_en, br_fw_man;
  int br_classes = 70;
  bool br_open = false;
  brown->add_option("--corpus", br_corpus, "Input factored corpus")->required();
  brown->add_option("--classes", br_classes, "Number of classes");
  brown->add_flag("--open-class-only", br_open, "Cluster only open-class words");
  brown->add_option("--function-words-en", br_fw_en, "EN function words");
  brown->add_option("--function-words-man", br_fw_man, "MAN function words");
  brown->add_option("--out", br_out, "Cluster map TSV")->required();

  // train-rnnlm ----------------------------------------------------------------
  auto* rnn = app.add_subcommand("train-rnnlm", "Train the recurrent-network LM");
  std::string rnn_text, rnn_dev, rnn_out, rnn_embeddings, rnn_ppl_text;
  int rnn_hidden = 100, rnn_bptt = 5, rnn_epochs = 5;
  double rnn_lr = 0.1;
  std::uint64_t rnn_seed = 1;
  rnn->add_option("--text", rnn_text, "Training text, one sequence per line")
      ->required();
  rnn->add_option("--dev", rnn_dev, "Dev text for the learning-rate schedule");
  rnn->add_option("--hidden", rnn_hidden, "Hidden layer size");
  rnn->add_option("--bptt", rnn_bptt, "Backpropagation-through-time steps");
  rnn->add_option("--epochs", rnn_epochs, "Training epochs");
  rnn->add_option("--lr", rnn_lr, "Initial learning rate");
  rnn->add_option("--seed", rnn_seed, "Random seed");
  rnn->add_option("--out", rnn_out, "Model output")->required();
  rnn->add_option("--emit-embeddings", rnn_embeddings,
                  "Write input-to-hidden rows as an embedding file");
  rnn->add_option("--ppl-text", rnn_ppl_text, "Print perplexity of this text");

  // cluster-embeddings ----------------------------------------------------------
  auto* cemb = app.add_subcommand("cluster-embeddings", "Cluster embedding vectors");
  std::string ce_embeddings, ce_method = "kmeans", ce_out;
  int ce_k = 100, ce_neighbors = 10;
  std::uint64_t ce_seed = 1;
  bool ce_validity = false;
  cemb->add_option("--embeddings", ce_embeddings, "Embedding file")->required();
  cemb->add_option("--method", ce_method, "kmeans|spectral");
  cemb->add_option("--k", ce_k, "Number of clusters");
  cemb->add_option("--neighbors", ce_neighbors, "Mutual kNN graph degree");
  cemb->add_option("--seed", ce_seed, "Random seed");
  cemb->add_option("--out", ce_out, "Cluster map TSV")->required();
  cemb->add_flag("--validity", ce_validity, "Print intra/inter/ratio JSON");

  // train-ngram -------------------------------------------------------------------
  auto* ngram = app.add_subcommand("train-ngram", "Train the baseline n-gram model");
  std::string ng_corpus, ng_smoothing = "witten-bell", ng_out;
  int ng_order = 3;
  ngram->add_option("--corpus", ng_corpus, "Input factored corpus")->required();
  ngram->add_option("--order", ng_order, "Model order");
  ngram->add_option("--smoothing", ng_smoothing, "witten-bell|kneser-ney-mod|ml");
  ngram->add_option("--out", ng_out, "Model output")->required();

  // train-flm -----------------------------------------------------------------------
  auto* flm = app.add_subcommand("train-flm", "Train a factored LM");
  std::string flm_corpus, flm_spec, flm_preset, flm_factors, flm_out;
  flm->add_option("--corpus", flm_corpus, "Input factored corpus")->required();
  flm->add_option("--spec", flm_spec, "Backoff-graph spec file");
  flm->add_option("--preset", flm_preset, "Built-in spec preset (best-seame)");
  flm->add_option("--factors", flm_factors,
                  "Conditioning factors for a full lattice, e.g. W,C,P");
  flm->add_option("--out", flm_out, "Model output")->required();

  // eval-ppl -----------------------------------------------------------------------
  auto* eval = app.add_subcommand("eval-ppl", "Evaluate perplexity on a split");
  std::string ev_model, ev_corpus, ev_split = "dev", ev_name, ev_out;
  eval->add_option("--model", ev_model, "Model file")->required();
  eval->add_option("--corpus", ev_corpus, "Factored corpus with splits")->required();
  eval->add_option("--split", ev_split, "train|dev|eval");
  eval->add_option("--name", ev_name, "Model name in the report");
  eval->add_option("--out", ev_out, "Report JSON (default: stdout)");

  // interpolate ----------------------------------------------------------------------
  auto* interp = app.add_subcommand("interpolate", "Mix models with linear weights");
  std::string in_models, in_weights, in_corpus, in_split = "dev", in_out;
  double in_step = 0.01;
  bool in_tune = false;
  interp->add_option("--models", in_models, "Comma-separated model files")->required();
  interp->add_option("--weights", in_weights, "Comma-separated weights");
  interp->add_flag("--tune", in_tune, "Tune weights by grid search on a split");
  interp->add_option("--corpus", in_corpus, "Corpus for --tune");
  interp->add_option("--split", in_split, "Split for --tune");
  interp->add_option("--step", in_step, "Grid step for --tune");
  interp->add_option("--out", in_out, "Interpolated model output")->required();

  // ga-search -------------------------------------------------------------------------
  auto* ga = app.add_subcommand("ga-search", "Genetic search over FLM structures");
  std::string ga_corpus, ga_factors, ga_out, ga_trace;
  int ga_population = 30, ga_generations = 20, ga_tournament = 3, ga_elitism = 2;
  int ga_budget = 0;
  double ga_crossover = 0.9, ga_mutation = 0.02;
  std::uint64_t ga_seed = 1;
  bool ga_refine = false;
  ga->add_option("--corpus", ga_corpus, "Input factored corpus")->required();
  ga->add_option("--factors", ga_factors, "Factor menu, e.g. W,P,C,OC,L")->required();
  ga->add_option("--population", ga_population, "Population size");
  ga->add_option("--generations", ga_generations, "Generations");
  ga->add_option("--budget", ga_budget,
                 "Total genome evaluations (overrides --generations)");
  ga->add_option("--crossover", ga_crossover, "Crossover rate");
  ga->add_option("--mutation", ga_mutation, "Per-gene mutation rate");
  ga->add_option("--tournament", ga_tournament, "Tournament size");
  ga->add_option("--elitism", ga_elitism, "Elites copied per generation");
  ga->add_option("--seed", ga_seed, "Random seed");
  ga->add_flag("--refine", ga_refine, "Hill-climb the best spec afterwards");
  ga->add_option("--out", ga_out, "Spec output file")->required();
  ga->add_option("--trace", ga_trace, "Fitness trace CSV");

  // run-pipeline ------------------------------------------------------------------------
  auto* pipeline = app.add_subcommand("run-pipeline", "Run an experiment pipeline");
  std::string pl_config, pl_out;
  pipeline->add_option("--config", pl_config, "Experiment config file")->required();
  pipeline->add_option("--out", pl_out, "Output directory override");

  // report ----------------------------------------------------------------------------
  auto* report = app.add_subcommand("report", "Summarize evaluation reports");
  std::string rp_inputs, rp_baseline, rp_out, rp_json;
  report->add_option("--inputs", rp_inputs, "Comma-separated report JSON files")
      ->required();
  report->add_option("--baseline", rp_baseline, "Baseline model name")->required();
  report->add_option("--out", rp_out, "Summary TSV (default: stdout)");
  report->add_option("--json", rp_json, "Summary JSON output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (generate->parsed()) {
    TRY(csflm_corpus_generate_full(gen_config.c_str(), gen_seed, gen_out.c_str(),
                                   opt(gen_particles), opt(gen_fw_en),
                                   opt(gen_fw_man)));
    if (gen_stats) {
      csflm_corpus* corpus = nullptr;
      TRY(csflm_corpus_read(gen_out.c_str(), &corpus));
      CorpusPtr guard(corpus, csflm_corpus_free);
      StringOut stats;
      TRY(csflm_corpus_stats(corpus, &stats.value));
      std::cout << stats.value << '\n';
    }
    return 0;
  }

  if (annotate->parsed()) {
    csflm_corpus* corpus = nullptr;
    TRY(csflm_corpus_read(ann_corpus.c_str(), &corpus));
    CorpusPtr guard(corpus, csflm_corpus_free);
    if (ann_lid) TRY(csflm_corpus_assign_lids(corpus, opt(ann_particles)));
    if (!ann_pos_train.empty()) {
      TRY(csflm_corpus_annotate_pos(corpus, ann_pos_train.c_str()));
    }
    if (!ann_oc.empty()) {
      TRY(csflm_corpus_annotate_oc(corpus, ann_oc.c_str(), opt(ann_fw_en),
                                   opt(ann_fw_man)));
    }
    for (const auto& mapping : ann_maps) {
      std::size_t colon = mapping.rfind(':');
      if (colon == std::string::npos) {
        std::fprintf(stderr, "csflm: error: --map-cluster expects FILE:SLOT\n");
        return 2;
      }
      csflm_clusters* clusters = nullptr;
      TRY(csflm_clusters_load(mapping.substr(0, colon).c_str(), &clusters));
      ClustersPtr cguard(clusters, csflm_clusters_free);
      TRY(csflm_corpus_map_clusters(corpus, clusters,
                                    mapping.substr(colon + 1).c_str()));
    }
    TRY(csflm_corpus_write(corpus, ann_out.c_str()));
    return 0;
  }

  if (analyze->parsed()) {
    csflm_corpus* corpus = nullptr;
    TRY(csflm_corpus_read(cs_corpus.c_str(), &corpus));
    CorpusPtr guard(corpus, csflm_corpus_free);
    StringOut tsv;
    TRY(csflm_analyze_cs(corpus, cs_factor.c_str(), cs_direction.c_str(),
                         cs_threshold, &tsv.value));
    return write_or_print(cs_out, tsv.value);
  }

  if (brown->parsed()) {
    csflm_corpus* corpus = nullptr;
    TRY(csflm_corpus_read(br_corpus.c_str(), &corpus));
    CorpusPtr guard(corpus, csflm_corpus_free);
    csflm_clusters* clusters = nullptr;
    TRY(csflm_brown_cluster(corpus, br_classes, br_open ? 1 : 0, opt(br_fw_en),
                            opt(br_fw_man), &clusters));
    ClustersPtr cguard(clusters, csflm_clusters_free);
    TRY(csflm_clusters_save(clusters, br_out.c_str()));
    return 0;
  }

  if (rnn->parsed()) {
    csflm_rnnlm* model = nullptr;
    TRY(csflm_rnnlm_train(rnn_text.c_str(), opt(rnn_dev), rnn_hidden, rnn_bptt,
                          rnn_epochs, rnn_lr, rnn_seed, &model));
    RnnlmPtr guard(model, csflm_rnnlm_free);
    TRY(csflm_rnnlm_save(model, rnn_out.c_str()));
    if (!rnn_embeddings.empty()) {
      csflm_embeddings* embeddings = nullptr;
      TRY(csflm_rnnlm_embeddings(model, &embeddings));
      EmbeddingsPtr eguard(embeddings, csflm_embeddings_free);
      TRY(csflm_embeddings_save(embeddings, rnn_embeddings.c_str()));
    }
    if (!rnn_ppl_text.empty()) {
      double ppl = 0.0;
      TRY(csflm_rnnlm_perplexity(model, rnn_ppl_text.c_str(), &ppl));
      std::printf("{\"text\": \"%s\", \"ppl\": %.6f}\n", rnn_ppl_text.c_str(), ppl);
    }
    return 0;
  }

  if (cemb->parsed()) {
    csflm_embeddings* embeddings = nullptr;
    TRY(csflm_embeddings_load(ce_embeddings.c_str(), &embeddings));
    EmbeddingsPtr guard(embeddings, csflm_embeddings_free);
    csflm_clusters* clusters = nullptr;
    TRY(csflm_cluster_embeddings(embeddings, ce_method.c_str(), ce_k, ce_neighbors,
                                 ce_seed, &clusters));
    ClustersPtr cguard(clusters, csflm_clusters_free);
    TRY(csflm_clusters_save(clusters, ce_out.c_str()));
    if (ce_validity) {
      double intra = 0.0, inter = 0.0, ratio = 0.0;
      TRY(csflm_cluster_validity(embeddings, clusters, &intra, &inter, &ratio));
      std::printf("{\"intra\": %.10f, \"inter\": %.10f, \"ratio\": %.10f}\n", intra,
                  inter, ratio);
    }
    return 0;
  }

  if (ngram->parsed()) {
    csflm_corpus* corpus = nullptr;
    TRY(csflm_corpus_read(ng_corpus.c_str(), &corpus));
    CorpusPtr guard(corpus, csflm_corpus_free);
    csflm_model* model = nullptr;
    TRY(csflm_train_ngram(corpus, ng_order, ng_smoothing.c_str(), &model));
    ModelPtr mguard(model, csflm_model_free);
    TRY(csflm_model_save(model, ng_out.c_str()));
    return 0;
  }

  if (flm->parsed()) {
    csflm_corpus* corpus = nullptr;
    TRY(csflm_corpus_read(flm_corpus.c_str(), &corpus));
    CorpusPtr guard(corpus, csflm_corpus_free);
    std::string factors = flm_factors.empty() ? "" : normalize_factors(flm_factors);
    csflm_model* model = nullptr;
    TRY(csflm_train_flm(corpus, opt(flm_spec), opt(flm_preset), opt(factors),
                        &model));
    ModelPtr mguard(model, csflm_model_free);
    TRY(csflm_model_save(model, flm_out.c_str()));
    return 0;
  }

  if (eval->parsed()) {
    csflm_model* model = nullptr;
    TRY(csflm_model_load(ev_model.c_str(), &model));
    ModelPtr mguard(model, csflm_model_free);
    csflm_corpus* corpus = nullptr;
    TRY(csflm_corpus_read(ev_corpus.c_str(), &corpus));
    CorpusPtr guard(corpus, csflm_corpus_free);
    StringOut report_json;
    std::string name = ev_name.empty() ? ev_model : ev_name;
    TRY(csflm_model_perplexity(model, corpus, ev_split.c_str(), name.c_str(),
                               &report_json.value));
    std::string content = std::string(report_json.value) + "\n";
    return write_or_print(ev_out, content.c_str());
  }

  if (interp->parsed()) {
    std::vector<std::string> paths = split_csv(in_models);
    if (paths.size() < 2) {
      std::fprintf(stderr, "csflm: error: --models needs at least two files\n");
      return 2;
    }
    std::vector<ModelPtr> guards;
    std::vector<const csflm_model*> models;
    for (const auto& path : paths) {
      csflm_model* model = nullptr;
      TRY(csflm_model_load(path.c_str(), &model));
      guards.emplace_back(model, csflm_model_free);
      models.push_back(model);
    }
    std::vector<double> weights;
    if (in_tune) {
      if (in_corpus.empty()) {
        std::fprintf(stderr, "csflm: error: --tune needs --corpus\n");
        return 2;
      }
      csflm_corpus* corpus = nullptr;
      TRY(csflm_corpus_read(in_corpus.c_str(), &corpus));
      CorpusPtr guard(corpus, csflm_corpus_free);
      weights.resize(models.size());
      TRY(csflm_tune_weights(models.data(), models.size(), corpus,
                             in_split.c_str(), in_step, weights.data()));
      std::printf("{\"weights\": [");
      for (std::size_t i = 0; i < weights.size(); ++i) {
        std::printf("%s%.6f", i ? ", " : "", weights[i]);
      }
      std::printf("]}\n");
    } else {
      for (const auto& w : split_csv(in_weights)) weights.push_back(std::stod(w));
      if (weights.size() != models.size()) {
        std::fprintf(stderr, "csflm: error: one weight per model required\n");
        return 2;
      }
    }
    csflm_model* mixed = nullptr;
    TRY(csflm_interpolate(models.data(), weights.data(), models.size(), &mixed));
    ModelPtr mguard(mixed, csflm_model_free);
    TRY(csflm_model_save(mixed, in_out.c_str()));
    return 0;
  }

  if (ga->parsed()) {
    csflm_corpus* corpus = nullptr;
    TRY(csflm_corpus_read(ga_corpus.c_str(), &corpus));
    CorpusPtr guard(corpus, csflm_corpus_free);
    if (ga_budget > 0) {
      ga_generations = std::max(1, (ga_budget + ga_population - 1) / ga_population);
    }
    std::string factors = normalize_factors(ga_factors);
    StringOut spec_text, trace_csv;
    TRY(csflm_ga_search(corpus, factors.c_str(), ga_population, ga_generations,
                        ga_crossover, ga_mutation, ga_tournament, ga_elitism,
                        ga_seed, &spec_text.value, &trace_csv.value));
    int rc = write_or_print(ga_out, spec_text.value);
    if (rc != 0) return rc;
    if (!ga_trace.empty()) {
      rc = write_or_print(ga_trace, trace_csv.value);
      if (rc != 0) return rc;
    }
    if (ga_refine) {
      StringOut refined;
      double dev_ppl = 0.0;
      TRY(csflm_hill_climb(corpus, ga_out.c_str(), factors.c_str(), &refined.value,
                           &dev_ppl));
      rc = write_or_print(ga_out, refined.value);
      if (rc != 0) return rc;
      std::printf("{\"refined_dev_ppl\": %.6f}\n", dev_ppl);
    }
    return 0;
  }

  if (pipeline->parsed()) {
    StringOut stages;
    TRY(csflm_run_pipeline(pl_config.c_str(), opt(pl_out), &stages.value));
    std::cout << stages.value << '\n';
    return 0;
  }

  if (report->parsed()) {
    std::vector<std::string> inputs = split_csv(rp_inputs);
    std::vector<const char*> paths;
    for (const auto& input : inputs) paths.push_back(input.c_str());
    StringOut tsv, json;
    TRY(csflm_report_summary(paths.data(), paths.size(), rp_baseline.c_str(),
                             &tsv.value, &json.value));
    int rc = write_or_print(rp_out, tsv.value);
    if (rc != 0) return rc;
    if (!rp_json.empty()) return write_or_print(rp_json, json.value);
    return 0;
  }

  return 2;
}
