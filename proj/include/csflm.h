/* Copyright 2026 The csflm Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C API of the csflm toolkit: corpus handling, code-switching analysis,
 * Brown and embedding clusterings, n-gram / factored language models with
 * generalized backoff, structure search and the experiment pipeline.
 *
 * All functions return csflm_status; on failure csflm_last_error() holds a
 * thread-local description. Output objects are opaque handles released with
 * the matching *_free function; returned strings are released with
 * csflm_string_free.
 */

#ifndef CSFLM_H
#define CSFLM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define CSFLM_API __declspec(dllexport)
#else
#define CSFLM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum csflm_status {
  CSFLM_OK = 0,
  CSFLM_ERR_INVALID_ARGUMENT = 1,
  CSFLM_ERR_PARSE = 2,
  CSFLM_ERR_IO = 3,
  CSFLM_ERR_RUNTIME = 4
} csflm_status;

CSFLM_API const char* csflm_version(void);
CSFLM_API const char* csflm_last_error(void);
CSFLM_API void csflm_string_free(char* s);

typedef struct csflm_corpus csflm_corpus;
typedef struct csflm_clusters csflm_clusters;
typedef struct csflm_embeddings csflm_embeddings;
typedef struct csflm_rnnlm csflm_rnnlm;
typedef struct csflm_model csflm_model;

/* ----- corpus ---------------------------------------------------------- */

CSFLM_API csflm_status csflm_corpus_read(const char* path, csflm_corpus** out);
CSFLM_API csflm_status csflm_corpus_write(const csflm_corpus* corpus,
                                          const char* path);
/* Synthetic code-switching corpus from a generator config; seed_override < 0
 * keeps the seed from the config file. */
CSFLM_API csflm_status csflm_corpus_generate(const char* config_path,
                                             int64_t seed_override,
                                             csflm_corpus** out);
/* As above, but also writes the ground-truth particle lexicon and per-language
 * function-word lists next to the corpus. Null paths skip that output. */
CSFLM_API csflm_status csflm_corpus_generate_full(
    const char* config_path, int64_t seed_override, const char* corpus_out,
    const char* particles_out, const char* function_words_en_out,
    const char* function_words_man_out);
CSFLM_API csflm_status csflm_corpus_stats(const csflm_corpus* corpus,
                                          char** json_out);
CSFLM_API csflm_status csflm_corpus_assign_lids(csflm_corpus* corpus,
                                                const char* particles_path);
/* Re-tags P factors with the code-switching tagger cascade; the built-in
 * unigram lexicon taggers are trained from the P factors of the given
 * factored file (one tagger per language). */
CSFLM_API csflm_status csflm_corpus_annotate_pos(csflm_corpus* corpus,
                                                 const char* tagger_train_path);
/* strategy: "sentence", "speaker" or "window:N" ("window:unlimited"). */
CSFLM_API csflm_status csflm_corpus_annotate_oc(csflm_corpus* corpus,
                                                const char* strategy,
                                                const char* function_words_en,
                                                const char* function_words_man);
/* slot: "C" (token clusters) or "OCC" (open-class-word clusters). */
CSFLM_API csflm_status csflm_corpus_map_clusters(csflm_corpus* corpus,
                                                 const csflm_clusters* clusters,
                                                 const char* slot);
CSFLM_API void csflm_corpus_free(csflm_corpus* corpus);

/* ----- code-switching analysis ----------------------------------------- */

/* factor: word|lid|pos|brown|oc|occ; direction: any|man-to-en|en-to-man.
 * Emits the trigger report as TSV. */
CSFLM_API csflm_status csflm_analyze_cs(const csflm_corpus* corpus,
                                        const char* factor, const char* direction,
                                        double threshold_fraction, char** tsv_out);

/* ----- cluster assignments --------------------------------------------- */

CSFLM_API csflm_status csflm_clusters_load(const char* path, csflm_clusters** out);
CSFLM_API csflm_status csflm_clusters_save(const csflm_clusters* clusters,
                                           const char* path);
CSFLM_API csflm_status csflm_brown_cluster(const csflm_corpus* corpus, int classes,
                                           int open_class_only,
                                           const char* function_words_en,
                                           const char* function_words_man,
                                           csflm_clusters** out);
CSFLM_API void csflm_clusters_free(csflm_clusters* clusters);

/* ----- embeddings and the recurrent-network LM -------------------------- */

CSFLM_API csflm_status csflm_embeddings_load(const char* path,
                                             csflm_embeddings** out);
CSFLM_API csflm_status csflm_embeddings_save(const csflm_embeddings* embeddings,
                                             const char* path);
CSFLM_API void csflm_embeddings_free(csflm_embeddings* embeddings);

CSFLM_API csflm_status csflm_rnnlm_train(const char* text_path,
                                         const char* dev_path, int hidden,
                                         int bptt_steps, int epochs,
                                         double learning_rate, uint64_t seed,
                                         csflm_rnnlm** out);
CSFLM_API csflm_status csflm_rnnlm_save(const csflm_rnnlm* model, const char* path);
CSFLM_API csflm_status csflm_rnnlm_load(const char* path, csflm_rnnlm** out);
CSFLM_API csflm_status csflm_rnnlm_perplexity(const csflm_rnnlm* model,
                                              const char* text_path,
                                              double* ppl_out);
CSFLM_API csflm_status csflm_rnnlm_embeddings(const csflm_rnnlm* model,
                                              csflm_embeddings** out);
CSFLM_API void csflm_rnnlm_free(csflm_rnnlm* model);

/* method: "kmeans" or "spectral" (neighbors only used by spectral). */
CSFLM_API csflm_status csflm_cluster_embeddings(const csflm_embeddings* embeddings,
                                                const char* method, int k,
                                                int neighbors, uint64_t seed,
                                                csflm_clusters** out);
CSFLM_API csflm_status csflm_cluster_validity(const csflm_embeddings* embeddings,
                                              const csflm_clusters* clusters,
                                              double* intra, double* inter,
                                              double* ratio);

/* ----- language models --------------------------------------------------- */

/* smoothing: witten-bell | kneser-ney-mod | ml (ml is unsuitable for
 * perplexity evaluation on unseen data). */
CSFLM_API csflm_status csflm_train_ngram(const csflm_corpus* corpus, int order,
                                         const char* smoothing, csflm_model** out);
/* Exactly one of spec_path (spec file), preset (e.g. "best-seame") or
 * factors_csv (e.g. "W(-1),C(-1),P(-1)" for a full backoff lattice) must be
 * non-null. */
CSFLM_API csflm_status csflm_train_flm(const csflm_corpus* corpus,
                                       const char* spec_path, const char* preset,
                                       const char* factors_csv, csflm_model** out);
CSFLM_API csflm_status csflm_model_save(const csflm_model* model, const char* path);
CSFLM_API csflm_status csflm_model_load(const char* path, csflm_model** out);
/* split: train|dev|eval. The report is {model, split, tokens, oov_events,
 * events, ppl} as JSON. */
CSFLM_API csflm_status csflm_model_perplexity(const csflm_model* model,
                                              const csflm_corpus* corpus,
                                              const char* split,
                                              const char* model_name,
                                              char** report_json_out);
CSFLM_API csflm_status csflm_interpolate(const csflm_model* const* models,
                                         const double* weights, size_t n,
                                         csflm_model** out);
/* Writes one weight per model into weights_out (length n). */
CSFLM_API csflm_status csflm_tune_weights(const csflm_model* const* models,
                                          size_t n, const csflm_corpus* corpus,
                                          const char* split, double grid_step,
                                          double* weights_out);
CSFLM_API void csflm_model_free(csflm_model* model);

/* ----- structure search --------------------------------------------------- */

CSFLM_API csflm_status csflm_ga_search(const csflm_corpus* corpus,
                                       const char* factors_csv, int population,
                                       int generations, double crossover_rate,
                                       double mutation_rate, int tournament,
                                       int elitism, uint64_t seed,
                                       char** spec_text_out, char** trace_csv_out);
CSFLM_API csflm_status csflm_hill_climb(const csflm_corpus* corpus,
                                        const char* spec_path,
                                        const char* factors_csv,
                                        char** spec_text_out, double* dev_ppl_out);

/* ----- experiment pipeline ------------------------------------------------ */

CSFLM_API csflm_status csflm_run_pipeline(const char* config_path,
                                          const char* out_dir,
                                          char** stages_json_out);
CSFLM_API csflm_status csflm_report_summary(const char* const* report_paths,
                                            size_t n, const char* baseline,
                                            char** tsv_out, char** json_out);

#ifdef __cplusplus
}
#endif

#endif /* CSFLM_H */
