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

#include "csflm/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "csflm/annotate.hpp"
#include "csflm/brown.hpp"
#include "csflm/cluster.hpp"
#include "csflm/corpus.hpp"
#include "csflm/error.hpp"
#include "csflm/flm.hpp"
#include "csflm/generator.hpp"
#include "csflm/model_io.hpp"
#include "csflm/ngram.hpp"
#include "csflm/rnnlm.hpp"
#include "json.hpp"

namespace csflm {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << content;
}

}  // namespace

std::string file_hash(const std::string& path) { return hex64(fnv1a64(read_file(path))); }

// ---------------------------------------------------------------------------
// Configuration

namespace {

const std::vector<std::string> kStageOrder = {"generate", "annotate", "cluster",
                                              "embed",    "train",    "evaluate",
                                              "interpolate", "report"};

std::string trim_copy(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

ModelSpec parse_model_spec(const std::string& name, const std::string& text,
                           int line_no) {
  ModelSpec spec;
  spec.name = name;
  std::istringstream in(text);
  std::string kind;
  in >> kind;
  if (kind != "ngram" && kind != "flm") {
    throw ParseError("model '" + name + "': kind must be ngram or flm", line_no);
  }
  spec.kind = kind;
  std::string item;
  while (in >> item) {
    std::size_t eq = item.find('=');
    if (eq == std::string::npos) {
      throw ParseError("model '" + name + "': expected key=value, got '" + item + "'",
                       line_no);
    }
    std::string key = item.substr(0, eq);
    std::string value = item.substr(eq + 1);
    if (key == "order") spec.order = std::stoi(value);
    else if (key == "smoothing") spec.smoothing = value;
    else if (key == "factors") spec.factors = value;
    else if (key == "preset") spec.preset = value;
    else if (key == "spec") spec.spec_file = value;
    else throw ParseError("model '" + name + "': unknown key '" + key + "'", line_no);
  }
  if (spec.kind == "flm" &&
      (spec.factors.empty() + spec.preset.empty() + spec.spec_file.empty()) != 2) {
    throw ParseError(
        "model '" + name + "': flm needs exactly one of factors/preset/spec",
        line_no);
  }
  return spec;
}

std::string resolve(const std::string& base, const std::string& path) {
  if (path.empty() || base.empty() || fs::path(path).is_absolute()) return path;
  return (fs::path(base) / path).string();
}

std::vector<FactorRef> parse_factor_csv(const std::string& csv) {
  std::vector<FactorRef> out;
  std::string item;
  std::istringstream in(csv);
  while (std::getline(in, item, ',')) {
    item = trim_copy(item);
    if (!item.empty()) out.push_back(FactorRef::parse(item));
  }
  return out;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (stages.empty()) throw InvalidArgument("experiment config: no stages");
  std::size_t cursor = 0;
  for (const auto& stage : stages) {
    auto it = std::find(kStageOrder.begin() + static_cast<std::ptrdiff_t>(cursor),
                        kStageOrder.end(), stage);
    if (it == kStageOrder.end()) {
      bool known = std::find(kStageOrder.begin(), kStageOrder.end(), stage) !=
                   kStageOrder.end();
      throw InvalidArgument(known ? "experiment config: stages out of order at '" +
                                        stage + "'"
                                  : "experiment config: unknown stage '" + stage + "'");
    }
    cursor = static_cast<std::size_t>(it - kStageOrder.begin()) + 1;
  }
  auto has = [this](const std::string& s) {
    return std::find(stages.begin(), stages.end(), s) != stages.end();
  };
  if (has("generate") && generator_config.empty()) {
    throw InvalidArgument("experiment config: generate stage needs generator_config");
  }
  if (!has("generate") && corpus_file.empty()) {
    throw InvalidArgument("experiment config: need generate stage or corpus_file");
  }
  if (has("evaluate") && !has("train")) {
    throw InvalidArgument("experiment config: evaluate requires train");
  }
  if (has("interpolate") && !has("evaluate")) {
    throw InvalidArgument("experiment config: interpolate requires evaluate");
  }
  if (has("report") && !has("evaluate")) {
    throw InvalidArgument("experiment config: report requires evaluate");
  }
  if (has("train") && models.empty()) {
    throw InvalidArgument("experiment config: train stage needs model declarations");
  }
  for (const auto& path :
       {resolve(config_dir, generator_config), resolve(config_dir, corpus_file),
        resolve(config_dir, particles_file), resolve(config_dir, function_words_en),
        resolve(config_dir, function_words_man)}) {
    if (!path.empty() && !fs::exists(path)) {
      throw InvalidArgument("experiment config: missing file '" + path + "'");
    }
  }
  for (const auto& model : models) {
    if (!model.spec_file.empty() &&
        !fs::exists(resolve(config_dir, model.spec_file))) {
      throw InvalidArgument("experiment config: missing spec '" + model.spec_file + "'");
    }
  }
}

ExperimentConfig read_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open experiment config '" + path + "'");
  ExperimentConfig cfg;
  cfg.config_dir = fs::path(path).parent_path().string();
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim_copy(line);
    if (line.empty()) continue;
    if (line.rfind("model ", 0) == 0) {
      std::size_t eq = line.find('=');
      if (eq == std::string::npos) throw ParseError("model line needs '='", line_no);
      std::string name = trim_copy(line.substr(6, eq - 6));
      cfg.models.push_back(parse_model_spec(name, trim_copy(line.substr(eq + 1)), line_no));
      continue;
    }
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected key = value", line_no);
    std::string key = trim_copy(line.substr(0, eq));
    std::string value = trim_copy(line.substr(eq + 1));
    try {
      if (key == "generator_config") cfg.generator_config = value;
      else if (key == "corpus_file") cfg.corpus_file = value;
      else if (key == "particles_file") cfg.particles_file = value;
      else if (key == "function_words_en") cfg.function_words_en = value;
      else if (key == "function_words_man") cfg.function_words_man = value;
      else if (key == "seed") cfg.seed = std::stoull(value);
      else if (key == "out_dir") cfg.out_dir = value;
      else if (key == "stages") {
        std::istringstream ss(value);
        std::string stage;
        cfg.stages.clear();
        while (ss >> stage) cfg.stages.push_back(stage);
      } else if (key == "oc_strategy") cfg.oc_strategy = value;
      else if (key == "brown_classes") cfg.brown_classes = std::stoi(value);
      else if (key == "embed_hidden") cfg.embed_hidden = std::stoi(value);
      else if (key == "embed_epochs") cfg.embed_epochs = std::stoi(value);
      else if (key == "embed_bptt") cfg.embed_bptt = std::stoi(value);
      else if (key == "embed_kmeans_k") cfg.embed_kmeans_k = std::stoi(value);
      else if (key == "embed_coverage") cfg.embed_coverage = std::stod(value);
      else if (key == "interpolation_baseline") cfg.interpolation_baseline = value;
      else if (key == "grid_step") cfg.grid_step = std::stod(value);
      else throw ParseError("unknown experiment config key '" + key + "'", line_no);
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception&) {
      throw ParseError("bad value for '" + key + "'", line_no);
    }
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Stage execution with content-addressed caching

namespace {

std::string canonical_config_string(const ExperimentConfig& c) {
  std::ostringstream out;
  out << "seed=" << c.seed << ";oc=" << c.oc_strategy << ";brown=" << c.brown_classes
      << ";embed=" << c.embed_hidden << ',' << c.embed_epochs << ',' << c.embed_bptt
      << ',' << c.embed_kmeans_k << ',' << c.embed_coverage
      << ";baseline=" << c.interpolation_baseline << ";step=" << c.grid_step
      << ";stages=";
  for (const auto& s : c.stages) out << s << ',';
  for (const auto& m : c.models) {
    out << ";model " << m.name << '=' << m.kind << ',' << m.order << ',' << m.smoothing
        << ',' << m.factors << ',' << m.preset << ',' << m.spec_file;
  }
  return out.str();
}

class StageRunner {
 public:
  StageRunner(const std::string& out_dir) : out_dir_(out_dir) {
    fs::create_directories(out_dir_);
    fs::create_directories(out_dir_ + "/models");
    fs::create_directories(out_dir_ + "/reports");
    std::string manifest_path = out_dir_ + "/manifest.json";
    if (fs::exists(manifest_path)) {
      try {
        previous_ = json::parse(read_file(manifest_path));
      } catch (const std::exception&) {
        previous_ = json::object();  // stale or corrupt: rerun everything
      }
    }
  }

  std::string abs(const std::string& relative) const {
    return out_dir_ + "/" + relative;
  }

  // Runs fn unless every output is already present with matching input and
  // content hashes from a previous run.
  bool run(const std::string& stage, const std::string& inputs_key,
           const std::vector<std::string>& outputs, const std::function<void()>& fn) {
    std::string inputs = hex64(fnv1a64(inputs_key));
    bool hit = previous_.contains("artifacts");
    if (hit) {
      for (const auto& rel : outputs) {
        const auto& arts = previous_["artifacts"];
        if (!arts.contains(rel) || arts[rel]["inputs"] != inputs ||
            !fs::exists(abs(rel)) || file_hash(abs(rel)) != arts[rel]["content"]) {
          hit = false;
          break;
        }
      }
    }
    if (!hit) {
      try {
        fn();
      } catch (const Error&) {
        throw;
      } catch (const std::exception& e) {
        throw Error("stage '" + stage + "' failed: " + e.what());
      }
    }
    for (const auto& rel : outputs) {
      if (!fs::exists(abs(rel))) {
        throw Error("stage '" + stage + "' did not produce '" + rel + "'");
      }
      artifacts_[rel] = {{"content", file_hash(abs(rel))},
                         {"inputs", inputs},
                         {"stage", stage}};
    }
    return hit;
  }

  std::string artifact_hash(const std::string& rel) const {
    return artifacts_.at(rel)["content"].get<std::string>();
  }

  void write_manifest(const std::string& config_hash) {
    json manifest;
    manifest["artifacts"] = artifacts_;
    manifest["config_hash"] = config_hash;
    manifest["version"] = kVersion;
    write_file(out_dir_ + "/manifest.json", manifest.dump(2) + "\n");
  }

 private:
  std::string out_dir_;
  json previous_ = json::object();
  json artifacts_ = json::object();
};

struct StageFailure {
  std::string stage;
  std::string what;
};

FlmSpec model_flm_spec(const ModelSpec& model, const std::string& config_dir) {
  if (!model.preset.empty()) return FlmSpec::preset(model.preset);
  if (!model.spec_file.empty()) {
    return FlmSpec::parse_file(resolve(config_dir, model.spec_file));
  }
  return FlmSpec::lattice(parse_factor_csv(model.factors),
                          smoothing_from_string(model.smoothing));
}

}  // namespace

PipelineResult run_pipeline(const ExperimentConfig& config,
                            const std::string& out_dir_override) {
  config.validate();
  PipelineResult result;
  result.out_dir = out_dir_override.empty() ? config.out_dir : out_dir_override;
  StageRunner runner(result.out_dir);
  std::string config_hash = hex64(fnv1a64(canonical_config_string(config)));

  auto enabled = [&config](const std::string& stage) {
    return std::find(config.stages.begin(), config.stages.end(), stage) !=
           config.stages.end();
  };

  // The corpus artifact chain; each stage consumes the latest version.
  std::string corpus_rel;

  // --- generate / ingest -------------------------------------------------
  if (enabled("generate")) {
    std::string gen_path = resolve(config.config_dir, config.generator_config);
    std::string inputs = "generate|" + file_hash(gen_path) + "|" +
                         std::to_string(config.seed);
    std::vector<std::string> outputs = {"corpus.factored", "particles.txt",
                                        "function_words_en.txt",
                                        "function_words_man.txt"};
    bool hit = runner.run("generate", inputs, outputs, [&] {
      GeneratorConfig gen = read_generator_config(gen_path);
      gen.seed = config.seed;
      SyntheticCorpus synth = generate_synthetic_cs(gen);
      write_factored(synth.corpus, runner.abs("corpus.factored"));
      write_word_list(synth.particle_lexicon, runner.abs("particles.txt"));
      write_word_list(synth.function_words_en, runner.abs("function_words_en.txt"));
      write_word_list(synth.function_words_man, runner.abs("function_words_man.txt"));
    });
    result.stages.push_back({"generate", hit});
    corpus_rel = "corpus.factored";
  } else {
    std::string src = resolve(config.config_dir, config.corpus_file);
    std::string inputs = "ingest|" + file_hash(src);
    std::vector<std::string> outputs = {"corpus.factored", "particles.txt",
                                        "function_words_en.txt",
                                        "function_words_man.txt"};
    bool hit = runner.run("ingest", inputs, outputs, [&] {
      write_file(runner.abs("corpus.factored"), read_file(src));
      auto copy_list = [&](const std::string& from, const std::string& to) {
        write_file(runner.abs(to),
                   from.empty() ? "" : read_file(resolve(config.config_dir, from)));
      };
      copy_list(config.particles_file, "particles.txt");
      copy_list(config.function_words_en, "function_words_en.txt");
      copy_list(config.function_words_man, "function_words_man.txt");
    });
    result.stages.push_back({"ingest", hit});
    corpus_rel = "corpus.factored";
  }

  // --- annotate ----------------------------------------------------------
  if (enabled("annotate")) {
    std::string inputs = "annotate|" + runner.artifact_hash(corpus_rel) + "|" +
                         runner.artifact_hash("function_words_en.txt") + "|" +
                         runner.artifact_hash("function_words_man.txt") + "|" +
                         config.oc_strategy;
    bool hit = runner.run("annotate", inputs, {"corpus.annotated.factored"}, [&] {
      Corpus corpus = read_factored(runner.abs(corpus_rel));
      FunctionWordLists lists;
      lists.en = read_word_list(runner.abs("function_words_en.txt"));
      lists.man = read_word_list(runner.abs("function_words_man.txt"));
      Corpus annotated =
          annotate_oc(corpus, OcStrategy::from_string(config.oc_strategy), lists);
      write_factored(annotated, runner.abs("corpus.annotated.factored"));
    });
    result.stages.push_back({"annotate", hit});
    corpus_rel = "corpus.annotated.factored";
  }

  // --- cluster (Brown word classes) ---------------------------------------
  if (enabled("cluster")) {
    std::string inputs = "cluster|" + runner.artifact_hash(corpus_rel) + "|" +
                         std::to_string(config.brown_classes);
    bool hit = runner.run("cluster", inputs,
                          {"brown.tsv", "corpus.clustered.factored"}, [&] {
      Corpus corpus = read_factored(runner.abs(corpus_rel));
      Corpus train_only;
      for (std::size_t i : corpus.split_indices(Split::Train)) {
        train_only.add(corpus.utterances[i], Split::Train);
      }
      ClusterAssignment brown = brown_cluster(train_only, config.brown_classes);
      write_cluster_map(brown, runner.abs("brown.tsv"));
      Corpus clustered = map_cluster_factor(corpus, brown, FactorKind::Brown);
      write_factored(clustered, runner.abs("corpus.clustered.factored"));
    });
    result.stages.push_back({"cluster", hit});
    corpus_rel = "corpus.clustered.factored";
  }

  // --- embed (RNNLM embeddings + k-means classes on OC words) -------------
  if (enabled("embed")) {
    std::ostringstream params;
    params << config.embed_hidden << ',' << config.embed_epochs << ','
           << config.embed_bptt << ',' << config.embed_kmeans_k << ','
           << config.embed_coverage << ',' << config.seed;
    std::string inputs = "embed|" + runner.artifact_hash(corpus_rel) + "|" +
                         runner.artifact_hash("function_words_en.txt") + "|" +
                         runner.artifact_hash("function_words_man.txt") + "|" +
                         params.str();
    std::vector<std::string> outputs = {"oc_text.txt", "rnnlm.model",
                                        "embeddings.txt", "occ.tsv",
                                        "embeddings.validity.json",
                                        "corpus.final.factored"};
    bool hit = runner.run("embed", inputs, outputs, [&] {
      Corpus corpus = read_factored(runner.abs(corpus_rel));
      FunctionWordLists lists;
      lists.en = read_word_list(runner.abs("function_words_en.txt"));
      lists.man = read_word_list(runner.abs("function_words_man.txt"));
      Corpus train_only;
      for (std::size_t i : corpus.split_indices(Split::Train)) {
        train_only.add(corpus.utterances[i], Split::Train);
      }
      Corpus open_class = restrict_to_open_class(train_only, lists);
      TextLines lines;
      WordSet vocab_words;
      for (const auto& utt : open_class.utterances) {
        std::vector<std::string> line;
        for (const auto& tok : utt.tokens) {
          line.push_back(tok.word);
          vocab_words.insert(tok.word);
        }
        lines.push_back(std::move(line));
      }
      OcTrainingText text =
          build_oc_training_text(lines, vocab_words, {}, config.embed_coverage);
      write_text_lines(text.train, runner.abs("oc_text.txt"));
      RnnLm::TrainConfig train_cfg;
      train_cfg.hidden = config.embed_hidden;
      train_cfg.epochs = config.embed_epochs;
      train_cfg.bptt_steps = config.embed_bptt;
      train_cfg.seed = config.seed + 1;
      RnnLm model = RnnLm::train(text.train, train_cfg,
                                 text.dev.empty() ? nullptr : &text.dev);
      model.save(runner.abs("rnnlm.model"));
      EmbeddingMatrix embeddings = model.extract_all_embeddings();
      save_embeddings(embeddings, runner.abs("embeddings.txt"));
      int k = std::min<int>(config.embed_kmeans_k,
                            static_cast<int>(embeddings.vectors.size()));
      ClusterAssignment occ = kmeans(embeddings, k, config.seed + 2);
      occ.set_source("kmeans");
      write_cluster_map(occ, runner.abs("occ.tsv"));
      json validity;
      if (k >= 2) {
        ValidityReport v = cluster_validity(embeddings, occ);
        validity["intra"] = v.intra;
        validity["inter"] = v.inter;
        validity["ratio"] = v.ratio;
      }
      validity["clusters"] = k;
      validity["vectors"] = embeddings.vectors.size();
      write_file(runner.abs("embeddings.validity.json"), validity.dump(2) + "\n");
      Corpus final_corpus = map_cluster_factor(corpus, occ, FactorKind::Occ);
      write_factored(final_corpus, runner.abs("corpus.final.factored"));
    });
    result.stages.push_back({"embed", hit});
    corpus_rel = "corpus.final.factored";
  }

  // --- train ---------------------------------------------------------------
  if (enabled("train")) {
    for (const auto& model : config.models) {
      std::ostringstream params;
      params << model.kind << ',' << model.order << ',' << model.smoothing << ','
             << model.factors << ',' << model.preset;
      if (!model.spec_file.empty()) {
        params << ',' << file_hash(resolve(config.config_dir, model.spec_file));
      }
      std::string inputs =
          "train|" + runner.artifact_hash(corpus_rel) + "|" + params.str();
      std::string out_rel = "models/" + model.name + ".model";
      bool hit = runner.run("train:" + model.name, inputs, {out_rel}, [&] {
        Corpus corpus = read_factored(runner.abs(corpus_rel));
        if (model.kind == "ngram") {
          NgramModel m = NgramModel::train(corpus, Split::Train, model.order,
                                           smoothing_from_string(model.smoothing));
          save_model_file(m, runner.abs(out_rel));
        } else {
          FlmModel m = FlmModel::train(corpus, Split::Train,
                                       model_flm_spec(model, config.config_dir));
          save_model_file(m, runner.abs(out_rel));
        }
      });
      result.stages.push_back({"train:" + model.name, hit});
    }
  }

  // --- evaluate --------------------------------------------------------------
  std::vector<std::pair<std::string, std::string>> report_files;  // name, rel
  auto evaluate_model = [&](const std::string& name, const std::string& model_rel) {
    Corpus corpus = read_factored(runner.abs(corpus_rel));
    auto model = load_model_file(runner.abs(model_rel));
    for (Split split : {Split::Dev, Split::Eval}) {
      PplReport report = perplexity(*model, corpus, split, name);
      write_file(runner.abs("reports/" + name + "." + to_string(split) + ".json"),
                 ppl_report_json(report) + "\n");
    }
  };
  if (enabled("evaluate")) {
    for (const auto& model : config.models) {
      std::string model_rel = "models/" + model.name + ".model";
      std::string inputs = "evaluate|" + runner.artifact_hash(corpus_rel) + "|" +
                           runner.artifact_hash(model_rel);
      std::vector<std::string> outputs = {"reports/" + model.name + ".dev.json",
                                          "reports/" + model.name + ".eval.json"};
      bool hit = runner.run("evaluate:" + model.name, inputs, outputs,
                            [&] { evaluate_model(model.name, model_rel); });
      result.stages.push_back({"evaluate:" + model.name, hit});
      report_files.emplace_back(model.name, outputs[0]);
      report_files.emplace_back(model.name, outputs[1]);
    }
  }

  // --- interpolate -------------------------------------------------------------
  if (enabled("interpolate")) {
    std::string baseline = config.interpolation_baseline;
    if (baseline.empty()) {
      for (const auto& model : config.models) {
        if (model.kind == "ngram") {
          baseline = model.name;
          break;
        }
      }
    }
    if (baseline.empty()) {
      throw Error("stage 'interpolate' failed: no baseline n-gram model");
    }
    std::string baseline_rel = "models/" + baseline + ".model";
    for (const auto& model : config.models) {
      if (model.name == baseline || model.kind != "flm") continue;
      std::string name = model.name + "+" + baseline;
      std::string model_rel = "models/" + model.name + ".model";
      std::ostringstream params;
      params << config.grid_step;
      std::string inputs = "interpolate|" + runner.artifact_hash(corpus_rel) + "|" +
                           runner.artifact_hash(model_rel) + "|" +
                           runner.artifact_hash(baseline_rel) + "|" + params.str();
      std::string out_model = "models/" + name + ".model";
      std::string out_weights = "models/" + name + ".weights.json";
      std::vector<std::string> outputs = {out_model, out_weights,
                                          "reports/" + name + ".dev.json",
                                          "reports/" + name + ".eval.json"};
      bool hit = runner.run("interpolate:" + name, inputs, outputs, [&] {
        Corpus corpus = read_factored(runner.abs(corpus_rel));
        std::vector<std::shared_ptr<const LanguageModel>> components = {
            load_model_file(runner.abs(model_rel)),
            load_model_file(runner.abs(baseline_rel))};
        std::vector<double> weights =
            tune_weights(components, corpus, Split::Dev, config.grid_step);
        auto mixed = interpolate(components, weights);
        save_model_file(*mixed, runner.abs(out_model));
        json weights_json;
        weights_json["components"] = {model.name, baseline};
        weights_json["weights"] = weights;
        write_file(runner.abs(out_weights), weights_json.dump(2) + "\n");
        evaluate_model(name, out_model);
      });
      result.stages.push_back({"interpolate:" + name, hit});
      report_files.emplace_back(name, "reports/" + name + ".dev.json");
      report_files.emplace_back(name, "reports/" + name + ".eval.json");
    }
  }

  // --- report ---------------------------------------------------------------
  for (const auto& [name, rel] : report_files) {
    (void)name;
    result.reports.push_back(ppl_report_from_json_file(runner.abs(rel)));
  }
  if (enabled("report")) {
    std::string baseline = config.interpolation_baseline;
    if (baseline.empty() && !config.models.empty()) baseline = config.models[0].name;
    std::string inputs = "report|" + baseline;
    for (const auto& [name, rel] : report_files) {
      inputs += "|" + runner.artifact_hash(rel);
    }
    bool hit = runner.run("report", inputs, {"report.tsv", "report.json"}, [&] {
      write_file(runner.abs("report.tsv"),
                 report_summary_tsv(result.reports, baseline));
      json root = json::parse(report_summary_json(result.reports, baseline));
      root["csflm_version"] = kVersion;
      root["config_hash"] = config_hash;
      write_file(runner.abs("report.json"), root.dump(2) + "\n");
    });
    result.stages.push_back({"report", hit});
  }

  runner.write_manifest(config_hash);
  return result;
}

// ---------------------------------------------------------------------------
// Report summaries

PplReport ppl_report_from_json_file(const std::string& path) {
  json parsed = json::parse(read_file(path));
  PplReport report;
  report.model = parsed.at("model").get<std::string>();
  report.split = parsed.at("split").get<std::string>();
  report.tokens = parsed.at("tokens").get<std::int64_t>();
  report.oov_events = parsed.at("oov_events").get<std::int64_t>();
  report.events = parsed.at("events").get<std::int64_t>();
  report.ppl = parsed.at("ppl").get<double>();
  return report;
}

namespace {

std::map<std::string, double> baseline_ppls(const std::vector<PplReport>& reports,
                                            const std::string& baseline) {
  std::map<std::string, double> out;
  for (const auto& r : reports) {
    if (r.model == baseline) out[r.split] = r.ppl;
  }
  if (out.empty()) {
    throw InvalidArgument("report summary: baseline '" + baseline + "' not found");
  }
  for (const auto& r : reports) {
    if (!out.count(r.split)) {
      throw InvalidArgument("report summary: mismatched splits (no baseline ppl for '" +
                            r.split + "')");
    }
  }
  return out;
}

}  // namespace

std::string report_summary_tsv(const std::vector<PplReport>& reports,
                               const std::string& baseline) {
  if (reports.empty()) throw InvalidArgument("report summary: no reports");
  auto base = baseline_ppls(reports, baseline);
  std::vector<PplReport> rows = reports;
  std::stable_sort(rows.begin(), rows.end(), [](const PplReport& a, const PplReport& b) {
    if (a.model != b.model) return a.model < b.model;
    return a.split < b.split;
  });
  std::ostringstream out;
  out << "model\tsplit\ttokens\toov_events\tppl\trel_reduction_pct\n";
  out.precision(6);
  out << std::fixed;
  for (const auto& r : rows) {
    double reduction = (base.at(r.split) - r.ppl) / base.at(r.split) * 100.0;
    out << r.model << '\t' << r.split << '\t' << r.tokens << '\t' << r.oov_events
        << '\t' << r.ppl << '\t' << reduction << '\n';
  }
  return out.str();
}

std::string report_summary_json(const std::vector<PplReport>& reports,
                                const std::string& baseline) {
  if (reports.empty()) throw InvalidArgument("report summary: no reports");
  auto base = baseline_ppls(reports, baseline);
  std::vector<PplReport> rows = reports;
  std::stable_sort(rows.begin(), rows.end(), [](const PplReport& a, const PplReport& b) {
    if (a.model != b.model) return a.model < b.model;
    return a.split < b.split;
  });
  json out;
  out["baseline"] = baseline;
  out["rows"] = json::array();
  for (const auto& r : rows) {
    json row;
    row["model"] = r.model;
    row["split"] = r.split;
    row["tokens"] = r.tokens;
    row["oov_events"] = r.oov_events;
    row["ppl"] = r.ppl;
    row["rel_reduction_pct"] = (base.at(r.split) - r.ppl) / base.at(r.split) * 100.0;
    out["rows"].push_back(row);
  }
  return out.dump(2) + "\n";
}

}  // namespace csflm
