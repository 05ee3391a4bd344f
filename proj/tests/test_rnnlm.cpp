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

#include <cmath>
#include <sstream>

#include "csflm/error.hpp"
#include "csflm/rnnlm.hpp"
#include "csflm/rng.hpp"
#include "doctest.h"

using namespace csflm;

namespace {

TextLines alternating_text(int lines, int len) {
  TextLines text;
  for (int l = 0; l < lines; ++l) {
    std::vector<std::string> line;
    for (int i = 0; i < len; ++i) line.push_back(i % 2 == 0 ? "a" : "b");
    text.push_back(line);
  }
  return text;
}

}  // namespace

TEST_CASE("zero-initialized model is exactly uniform") {
  TextLines text = {{"a", "b", "c"}, {"d", "a"}};
  RnnLm::TrainConfig cfg;
  cfg.hidden = 6;
  cfg.epochs = 0;
  cfg.init_scale = 0.0;
  RnnLm m = RnnLm::train(text, cfg);
  // vocab: a b c d + </s> + <unk>
  CHECK(m.vocab_size() == 6);
  CHECK(m.perplexity(text) == doctest::Approx(6.0).epsilon(1e-12));
  auto dists = m.forward_distributions({"a", "b"});
  for (const auto& d : dists) {
    for (double p : d) CHECK(p == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
  }
}

TEST_CASE("training is deterministic under a fixed seed") {
  TextLines text = alternating_text(6, 8);
  RnnLm::TrainConfig cfg;
  cfg.hidden = 5;
  cfg.epochs = 2;
  cfg.seed = 42;
  RnnLm a = RnnLm::train(text, cfg);
  RnnLm b = RnnLm::train(text, cfg);
  std::ostringstream da, db;
  a.save(da);
  b.save(db);
  CHECK(da.str() == db.str());
  cfg.seed = 43;
  RnnLm c = RnnLm::train(text, cfg);
  std::ostringstream dc;
  c.save(dc);
  CHECK(da.str() != dc.str());
}

TEST_CASE("training rejects bad arguments") {
  RnnLm::TrainConfig cfg;
  CHECK_THROWS_AS(RnnLm::train({}, cfg), InvalidArgument);
  cfg.hidden = 0;
  CHECK_THROWS_AS(RnnLm::train({{"a"}}, cfg), InvalidArgument);
}

TEST_CASE("one epoch improves on the untrained model") {
  TextLines text = alternating_text(8, 10);
  RnnLm::TrainConfig cfg;
  cfg.hidden = 8;
  cfg.seed = 7;
  cfg.epochs = 0;
  double before = RnnLm::train(text, cfg).perplexity(text);
  cfg.epochs = 1;
  double after = RnnLm::train(text, cfg).perplexity(text);
  CHECK(after < before);
}

TEST_CASE("the alternating corpus converges to P(b|a) > P(a|a)") {
  TextLines text = alternating_text(10, 12);
  RnnLm::TrainConfig cfg;
  cfg.hidden = 8;
  cfg.epochs = 12;
  cfg.bptt_steps = 4;
  cfg.seed = 3;
  RnnLm m = RnnLm::train(text, cfg);
  auto dists = m.forward_distributions({"a", "b", "a"});
  // dists[1] is the distribution after consuming "a".
  CHECK(dists[1][static_cast<std::size_t>(m.word_id("b"))] >
        dists[1][static_cast<std::size_t>(m.word_id("a"))]);
}

TEST_CASE("training loss is non-increasing on the deterministic corpus") {
  TextLines text = alternating_text(6, 10);
  RnnLm::TrainConfig cfg;
  cfg.hidden = 6;
  cfg.epochs = 8;
  cfg.learning_rate = 0.05;
  cfg.seed = 11;
  RnnLm::TrainTrace trace;
  RnnLm::train(text, cfg, nullptr, &trace);
  REQUIRE(trace.train_ppl.size() == 8);
  for (std::size_t e = 1; e < trace.train_ppl.size(); ++e) {
    CHECK(trace.train_ppl[e] <= trace.train_ppl[e - 1] + 1e-9);
  }
}

TEST_CASE("softmax rows sum to one") {
  TextLines text = alternating_text(4, 6);
  RnnLm::TrainConfig cfg;
  cfg.hidden = 7;
  cfg.epochs = 2;
  cfg.seed = 9;
  RnnLm m = RnnLm::train(text, cfg);
  for (const auto& dist : m.forward_distributions({"a", "zz", "b", "a"})) {
    double sum = 0.0;
    for (double p : dist) sum += p;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("hidden state resets at every line start") {
  TextLines text = alternating_text(5, 9);
  RnnLm::TrainConfig cfg;
  cfg.hidden = 6;
  cfg.epochs = 3;
  cfg.seed = 13;
  RnnLm m = RnnLm::train(text, cfg);
  std::vector<std::string> line_a = {"a", "b", "a"};
  std::vector<std::string> line_b = {"b", "b"};
  double lp_a = m.line_log2prob(line_a);
  double lp_b = m.line_log2prob(line_b);
  // Scoring the lines as one text must decompose into the per-line sums.
  double joint = m.perplexity({line_a, line_b});
  double expected = std::exp2(-(lp_a + lp_b) / 7.0);  // 3+1 + 2+1 events
  CHECK(joint == doctest::Approx(expected).epsilon(1e-12));
  // And the per-line scores do not depend on what was scored before.
  m.perplexity({line_b});
  CHECK(m.line_log2prob(line_a) == lp_a);
}

TEST_CASE("analytic gradients match central finite differences") {
  // 5-word vocabulary, H=8, full BPTT over a short line.
  TextLines text = {{"v", "w", "x", "y", "z", "v", "w", "x"},
                    {"y", "z", "v", "x"}};
  std::vector<std::string> probe_line = {"v", "y", "x", "z", "w", "v"};
  Rng seed_stream(2025);
  for (int trial = 0; trial < 10; ++trial) {
    RnnLm::TrainConfig cfg;
    cfg.hidden = 8;
    cfg.epochs = 0;
    cfg.init_scale = 0.4;
    cfg.seed = seed_stream.next_u64();
    RnnLm m = RnnLm::train(text, cfg);
    const int bptt = 64;  // covers the whole line: gradients are exact
    RnnLm::Gradients g = m.line_gradients(probe_line, bptt);

    auto check_matrix = [&](std::vector<std::vector<double>>& weights,
                            const std::vector<std::vector<double>>& analytic,
                            const char* name) {
      const double h = 1e-5;
      for (std::size_t r = 0; r < weights.size(); ++r) {
        for (std::size_t c = 0; c < weights[r].size(); ++c) {
          double saved = weights[r][c];
          weights[r][c] = saved + h;
          double up = m.line_gradients(probe_line, bptt).loss;
          weights[r][c] = saved - h;
          double down = m.line_gradients(probe_line, bptt).loss;
          weights[r][c] = saved;
          double numeric = (up - down) / (2.0 * h);
          double denom = std::max({std::abs(numeric), std::abs(analytic[r][c]), 1e-4});
          INFO("trial ", trial, " ", name, "[", r, "][", c, "]");
          CHECK(std::abs(numeric - analytic[r][c]) / denom <= 1e-4);
        }
      }
    };
    check_matrix(m.input_hidden(), g.input_hidden, "U");
    check_matrix(m.hidden_hidden(), g.hidden_hidden, "W");
    check_matrix(m.hidden_output(), g.hidden_output, "V");
  }
}

TEST_CASE("truncated BPTT differs from full BPTT on long lines") {
  TextLines text = alternating_text(3, 12);
  RnnLm::TrainConfig cfg;
  cfg.hidden = 5;
  cfg.epochs = 0;
  cfg.init_scale = 0.3;
  cfg.seed = 77;
  RnnLm m = RnnLm::train(text, cfg);
  std::vector<std::string> line = text[0];
  auto g1 = m.line_gradients(line, 1);
  auto gf = m.line_gradients(line, 64);
  CHECK(g1.loss == doctest::Approx(gf.loss));  // loss is forward-only
  double diff = 0.0;
  for (std::size_t r = 0; r < g1.hidden_hidden.size(); ++r) {
    for (std::size_t c = 0; c < g1.hidden_hidden[r].size(); ++c) {
      diff += std::abs(g1.hidden_hidden[r][c] - gf.hidden_hidden[r][c]);
    }
  }
  CHECK(diff > 1e-8);
}

TEST_CASE("embeddings are rows of the input-to-hidden matrix") {
  TextLines text = {{"cat", "dog", "cat"}, {"dog", "fish"}};
  RnnLm::TrainConfig cfg;
  cfg.hidden = 4;
  cfg.epochs = 1;
  cfg.seed = 5;
  RnnLm m = RnnLm::train(text, cfg);
  EmbeddingMatrix e = m.extract_embeddings({"cat", "fish"});
  CHECK(e.dim == 4);
  REQUIRE(e.vectors.size() == 2);
  CHECK(e.vectors.at("cat") ==
        m.input_hidden()[static_cast<std::size_t>(m.word_id("cat"))]);

  SUBCASE("empty request gives an empty matrix") {
    EmbeddingMatrix none = m.extract_embeddings({});
    CHECK(none.vectors.empty());
  }
  SUBCASE("out-of-vocabulary words are listed in the error") {
    try {
      m.extract_embeddings({"cat", "bird", "worm"});
      FAIL("expected InvalidArgument");
    } catch (const InvalidArgument& e2) {
      std::string msg = e2.what();
      CHECK(msg.find("bird") != std::string::npos);
      CHECK(msg.find("worm") != std::string::npos);
      CHECK(msg.find("cat") == std::string::npos);
    }
  }
  SUBCASE("zero-initialized model has all-zero embeddings") {
    RnnLm::TrainConfig zcfg;
    zcfg.hidden = 4;
    zcfg.epochs = 0;
    zcfg.init_scale = 0.0;
    RnnLm zero = RnnLm::train(text, zcfg);
    for (const auto& [_, vec] : zero.extract_all_embeddings().vectors) {
      for (double v : vec) CHECK(v == 0.0);
    }
  }
}

TEST_CASE("rnnlm perplexity equals an independent accumulation") {
  TextLines text = alternating_text(4, 7);
  RnnLm::TrainConfig cfg;
  cfg.hidden = 5;
  cfg.epochs = 2;
  cfg.seed = 21;
  RnnLm m = RnnLm::train(text, cfg);
  TextLines eval = {{"a", "b", "b"}, {"b", "a"}};
  double log2_sum = 0.0;
  std::int64_t events = 0;
  for (const auto& line : eval) {
    auto dists = m.forward_distributions(line);
    std::vector<int> ids;
    for (const auto& w : line) ids.push_back(m.word_id(w));
    ids.push_back(m.word_id("</s>"));
    for (std::size_t t = 0; t < dists.size(); ++t) {
      log2_sum += std::log2(dists[t][static_cast<std::size_t>(ids[t])]);
      ++events;
    }
  }
  CHECK(m.perplexity(eval) ==
        doctest::Approx(std::exp2(-log2_sum / static_cast<double>(events)))
            .epsilon(1e-12));
  CHECK_THROWS_AS(m.perplexity({}), InvalidArgument);
}

TEST_CASE("rnnlm save/load identity") {
  TextLines text = alternating_text(4, 6);
  RnnLm::TrainConfig cfg;
  cfg.hidden = 5;
  cfg.epochs = 2;
  cfg.seed = 31;
  RnnLm m = RnnLm::train(text, cfg);
  std::ostringstream first;
  m.save(first);
  std::istringstream in(first.str());
  RnnLm re = RnnLm::load(in);
  std::ostringstream second;
  re.save(second);
  CHECK(first.str() == second.str());
  CHECK(re.line_log2prob({"a", "b"}) == m.line_log2prob({"a", "b"}));
}

TEST_CASE("embedding files parse, reject ragged rows and round-trip") {
  SUBCASE("basic parse") {
    std::istringstream in("cat 0.1 0.2\ndog 0.3 0.4\n");
    EmbeddingMatrix m = load_embeddings(in, "test");
    CHECK(m.dim == 2);
    CHECK(m.vectors.at("cat") == std::vector<double>{0.1, 0.2});
    CHECK(m.vectors.at("dog") == std::vector<double>{0.3, 0.4});
  }
  SUBCASE("ragged row") {
    std::istringstream in("cat 0.1 0.2\ndog 0.3\n");
    try {
      load_embeddings(in, "test");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
  }
  SUBCASE("non-numeric entry") {
    std::istringstream in("cat 0.1 fish\n");
    CHECK_THROWS_AS(load_embeddings(in, "test"), ParseError);
  }
  SUBCASE("write-then-load identity") {
    EmbeddingMatrix m;
    m.dim = 3;
    m.vectors["x"] = {0.125, -2.5, 1.0 / 3.0};
    m.vectors["y"] = {1e-17, 3.25, -0.75};
    std::ostringstream out;
    save_embeddings(m, out);
    std::istringstream in(out.str());
    EmbeddingMatrix re = load_embeddings(in, "roundtrip");
    CHECK(re.dim == m.dim);
    CHECK(re.vectors == m.vectors);
  }
}

TEST_CASE("build_oc_training_text filters and splits") {
  TextLines lines;
  for (int i = 0; i < 33; ++i) {
    lines.push_back({"the", "w" + std::to_string(i % 4), "rare" + std::to_string(i)});
  }
  WordSet vocab = {"w0", "w1", "w2", "w3"};
  WordSet function_words = {"the"};

  SUBCASE("threshold 0 keeps all lines minus function words") {
    OcTrainingText t = build_oc_training_text(lines, vocab, function_words, 0.0);
    CHECK(t.train.size() + t.dev.size() == 33);
    CHECK(t.dev.size() == 3);  // every 11th kept line
    for (const auto& line : t.train) {
      for (const auto& w : line) CHECK(w != "the");
    }
  }
  SUBCASE("threshold 1 keeps only fully covered lines") {
    OcTrainingText t = build_oc_training_text(lines, vocab, function_words, 1.0);
    CHECK(t.train.size() + t.dev.size() == 0);  // every line has a rare word
    TextLines covered = {{"w0", "w1"}, {"the", "w2"}};
    OcTrainingText t2 = build_oc_training_text(covered, vocab, function_words, 1.0);
    CHECK(t2.train.size() == 2);
  }
  SUBCASE("kept-line set equals a brute-force filter") {
    double threshold = 0.5;
    OcTrainingText t = build_oc_training_text(lines, vocab, function_words, threshold);
    TextLines expected;
    for (const auto& line : lines) {
      std::vector<std::string> filtered;
      for (const auto& w : line) {
        if (!function_words.count(w)) filtered.push_back(w);
      }
      if (filtered.empty()) continue;
      std::size_t in_vocab = 0;
      for (const auto& w : filtered) in_vocab += vocab.count(w);
      if (static_cast<double>(in_vocab) / static_cast<double>(filtered.size()) >=
          threshold) {
        expected.push_back(filtered);
      }
    }
    TextLines actual = t.train;
    // Re-interleave dev lines at positions 10, 21, ...
    for (std::size_t d = 0; d < t.dev.size(); ++d) {
      actual.insert(actual.begin() + static_cast<std::ptrdiff_t>(10 + d * 11),
                    t.dev[d]);
    }
    CHECK(actual == expected);
  }
}
