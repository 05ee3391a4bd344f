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

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "csflm/error.hpp"
#include "csflm/pipeline.hpp"
#include "doctest.h"

using namespace csflm;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Fresh scratch directory with a small generator + experiment config pair.
struct Scratch {
  fs::path dir;

  explicit Scratch(const std::string& name) {
    dir = fs::temp_directory_path() / ("csflm_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::ofstream gen(dir / "gen.cfg");
    gen << "man_vocab_size = 70\n"
           "en_vocab_size = 60\n"
           "num_utterances = 500\n"
           "utt_len_min = 5\n"
           "utt_len_max = 11\n"
           "category_stickiness = 0.5\n"
           "base_switch_prob = 0.15\n"
           "particle_prob = 0.03\n"
           "seed = 7\n";
    std::ofstream exp(dir / "exp.cfg");
    exp << "generator_config = gen.cfg\n"
           "seed = 19\n"
           "stages = generate annotate cluster embed train evaluate interpolate report\n"
           "oc_strategy = speaker\n"
           "brown_classes = 12\n"
           "embed_hidden = 4\n"
           "embed_epochs = 1\n"
           "embed_bptt = 3\n"
           "embed_kmeans_k = 8\n"
           "model baseline-3gram = ngram order=3 smoothing=witten-bell\n"
           "model flm-brc-pos = flm factors=W(-1),C(-1),P(-1)\n";
  }
};

}  // namespace

TEST_CASE("pipeline runs, caches and is byte-identical across runs") {
  Scratch scratch("pipeline_main");
  ExperimentConfig cfg = read_experiment_config((scratch.dir / "exp.cfg").string());

  std::string out1 = (scratch.dir / "out1").string();
  PipelineResult first = run_pipeline(cfg, out1);
  for (const auto& stage : first.stages) {
    INFO("stage ", stage.stage);
    CHECK_FALSE(stage.cache_hit);
  }
  REQUIRE(fs::exists(fs::path(out1) / "report.tsv"));
  REQUIRE(fs::exists(fs::path(out1) / "manifest.json"));

  // Reports cover both models, both splits and the tuned interpolation.
  std::set<std::string> models;
  for (const auto& r : first.reports) models.insert(r.model);
  CHECK(models.count("baseline-3gram"));
  CHECK(models.count("flm-brc-pos"));
  CHECK(models.count("flm-brc-pos+baseline-3gram"));
  CHECK(first.reports.size() == 6);  // 3 models x 2 splits

  SUBCASE("second run in the same directory is all cache hits") {
    PipelineResult second = run_pipeline(cfg, out1);
    for (const auto& stage : second.stages) {
      INFO("stage ", stage.stage);
      CHECK(stage.cache_hit);
    }
    CHECK(second.reports.size() == first.reports.size());
  }

  SUBCASE("a fresh output directory reproduces the bundle byte for byte") {
    std::string out2 = (scratch.dir / "out2").string();
    run_pipeline(cfg, out2);
    for (const char* file : {"report.tsv", "report.json", "manifest.json",
                             "corpus.factored", "brown.tsv", "occ.tsv"}) {
      INFO("file ", file);
      CHECK(slurp(fs::path(out1) / file) == slurp(fs::path(out2) / file));
    }
  }

  SUBCASE("changing a parameter invalidates only downstream stages") {
    ExperimentConfig changed = cfg;
    changed.brown_classes = 9;
    PipelineResult rerun = run_pipeline(changed, out1);
    std::map<std::string, bool> hit;
    for (const auto& stage : rerun.stages) hit[stage.stage] = stage.cache_hit;
    CHECK(hit.at("generate"));
    CHECK(hit.at("annotate"));
    CHECK_FALSE(hit.at("cluster"));
    CHECK_FALSE(hit.at("train:baseline-3gram"));  // corpus artifact changed
    CHECK_FALSE(hit.at("report"));
  }
}

TEST_CASE("experiment config validation fails before any stage runs") {
  Scratch scratch("pipeline_validation");
  ExperimentConfig cfg = read_experiment_config((scratch.dir / "exp.cfg").string());

  SUBCASE("missing generator config file") {
    cfg.generator_config = "missing.cfg";
    CHECK_THROWS_AS(run_pipeline(cfg, (scratch.dir / "never").string()), InvalidArgument);
    CHECK_FALSE(fs::exists(scratch.dir / "never" / "corpus.factored"));
  }
  SUBCASE("stages out of order") {
    cfg.stages = {"train", "generate"};
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  }
  SUBCASE("unknown stage") {
    cfg.stages = {"generate", "decode"};
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  }
  SUBCASE("evaluate without train") {
    cfg.stages = {"generate", "evaluate"};
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  }
  SUBCASE("flm model spec needs exactly one source") {
    std::ofstream bad(scratch.dir / "bad.cfg");
    bad << "generator_config = gen.cfg\nstages = generate\n"
           "model m = flm factors=W(-1) preset=best-seame\n";
    bad.close();
    CHECK_THROWS_AS(read_experiment_config((scratch.dir / "bad.cfg").string()),
                    ParseError);
  }
}

TEST_CASE("report summary arithmetic") {
  auto report = [](const std::string& model, const std::string& split, double ppl) {
    PplReport r;
    r.model = model;
    r.split = split;
    r.tokens = 100;
    r.events = 110;
    r.ppl = ppl;
    return r;
  };

  SUBCASE("a single report compares to itself at zero reduction") {
    std::string tsv = report_summary_tsv({report("m", "dev", 123.0)}, "m");
    CHECK(tsv.find("m\tdev\t100\t0\t123.000000\t0.000000\n") != std::string::npos);
  }
  SUBCASE("the published pair reduces by 10.78 percent") {
    std::string tsv = report_summary_tsv(
        {report("baseline", "eval", 282.86), report("flm", "eval", 252.37)},
        "baseline");
    std::istringstream lines(tsv);
    std::string line;
    double reduction = -1.0;
    while (std::getline(lines, line)) {
      if (line.rfind("flm\t", 0) == 0) {
        std::size_t tab = line.rfind('\t');
        reduction = std::stod(line.substr(tab + 1));
      }
    }
    CHECK(std::abs(reduction - 10.78) < 0.005);
  }
  SUBCASE("reductions equal recomputation from raw PPLs") {
    std::vector<PplReport> reports = {report("base", "dev", 200.0),
                                      report("base", "eval", 220.0),
                                      report("m", "dev", 150.0),
                                      report("m", "eval", 231.0)};
    std::string tsv = report_summary_tsv(reports, "base");
    CHECK(tsv.find("m\tdev\t100\t0\t150.000000\t25.000000\n") != std::string::npos);
    CHECK(tsv.find("m\teval\t100\t0\t231.000000\t-5.000000\n") != std::string::npos);
  }
  SUBCASE("mismatched splits are an error") {
    CHECK_THROWS_AS(report_summary_tsv(
                        {report("base", "dev", 200.0), report("m", "eval", 100.0)},
                        "base"),
                    InvalidArgument);
    CHECK_THROWS_AS(report_summary_tsv({report("m", "dev", 1.0)}, "other"),
                    InvalidArgument);
  }
}

TEST_CASE("the manifest lists every artifact with its input hashes") {
  Scratch scratch("pipeline_manifest");
  ExperimentConfig cfg = read_experiment_config((scratch.dir / "exp.cfg").string());
  cfg.stages = {"generate", "annotate", "cluster", "train", "evaluate", "report"};
  std::string out = (scratch.dir / "out").string();
  run_pipeline(cfg, out);

  std::string manifest = slurp(fs::path(out) / "manifest.json");
  for (const auto& entry : fs::recursive_directory_iterator(out)) {
    if (!entry.is_regular_file()) continue;
    fs::path rel = fs::relative(entry.path(), out);
    if (rel == "manifest.json") continue;
    INFO("artifact ", rel.string());
    CHECK(manifest.find("\"" + rel.generic_string() + "\"") != std::string::npos);
  }
  // Every artifact entry carries content and input hashes.
  std::size_t inputs = 0, pos = 0;
  while ((pos = manifest.find("\"inputs\"", pos)) != std::string::npos) {
    ++inputs;
    ++pos;
  }
  std::size_t contents = 0;
  pos = 0;
  while ((pos = manifest.find("\"content\"", pos)) != std::string::npos) {
    ++contents;
    ++pos;
  }
  CHECK(inputs == contents);
  CHECK(inputs >= 10);
}
