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
#include <map>
#include <sstream>

#include "csflm/annotate.hpp"
#include "csflm/brown.hpp"
#include "csflm/error.hpp"
#include "csflm/flm.hpp"
#include "csflm/generator.hpp"
#include "csflm/ngram.hpp"
#include "csflm/rng.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace csflm;
using namespace csflm::test;

namespace {

Corpus text_corpus(const std::vector<std::vector<std::string>>& utts,
                   Split split = Split::Train) {
  Corpus c;
  for (const auto& words : utts) {
    Utterance u;
    u.speaker = "s";
    for (const auto& w : words) u.tokens.push_back(tok(w, LanguageTag::En));
    c.add(u, split);
  }
  return c;
}

// Word-only chain spec of the given order: drop the oldest word first.
FlmSpec word_chain(int order, Smoothing smoothing, Combine combine) {
  std::vector<FactorRef> factors;
  for (int lag = -(order - 1); lag <= -1; ++lag) {
    factors.push_back({FactorKind::Word, lag});
  }
  FlmSpec spec;
  spec.factors = factors;  // already oldest-first
  for (int size = order - 1; size >= 0; --size) {
    FlmNodeSpec node;
    node.smoothing = smoothing;
    node.combine = combine;
    // Keep the `size` newest factors.
    for (int i = order - 1 - size; i < order - 1; ++i) node.factors.push_back(i);
    spec.nodes.push_back(std::move(node));
  }
  spec.children.resize(spec.nodes.size());
  for (std::size_t i = 0; i + 1 < spec.nodes.size(); ++i) {
    spec.children[i].push_back(static_cast<int>(i) + 1);
  }
  spec.validate();
  return spec;
}

double flm_sum_over_predictions(const FlmModel& m, const FlmModel::FactorContext& ctx) {
  double sum = 0.0;
  for (int w = 0; w < m.vocab().size(); ++w) {
    if (w == Vocabulary::kSentBeginId) continue;
    sum += m.prob(ctx, w);
  }
  return sum;
}

}  // namespace

TEST_CASE("factor references parse and order by age") {
  FactorRef w1 = FactorRef::parse("W(-1)");
  CHECK(w1.kind == FactorKind::Word);
  CHECK(w1.lag == -1);
  FactorRef c2 = FactorRef::parse("C(-2)");
  CHECK(c2.kind == FactorKind::Brown);
  CHECK(FactorRef::older(c2, w1));
  CHECK_FALSE(FactorRef::older(w1, c2));
  CHECK(FactorRef::older(FactorRef{FactorKind::Word, -1},
                         FactorRef{FactorKind::Pos, -1}));
  CHECK_THROWS_AS(FactorRef::parse("W(1)"), ParseError);
  CHECK_THROWS_AS(FactorRef::parse("Q(-1)"), ParseError);
  CHECK_THROWS_AS(FactorRef::parse("W-1"), ParseError);
}

TEST_CASE("lattice spec construction") {
  FlmSpec spec = FlmSpec::lattice({{FactorKind::Word, -1}, {FactorKind::Pos, -1}});
  CHECK(spec.nodes.size() == 4);
  CHECK(spec.nodes[0].factors == std::vector<int>{0, 1});
  CHECK(spec.children[0].size() == 2);
  // nodes[0]'s first child drops the oldest factor (W(-1) orders before P(-1)).
  const auto& first_child = spec.nodes[static_cast<std::size_t>(spec.children[0][0])];
  CHECK(first_child.factors == std::vector<int>{1});
  spec.validate();
}

TEST_CASE("spec text parsing") {
  SUBCASE("lattice mode with node overrides") {
    FlmSpec spec = FlmSpec::parse(
        "# demo\n"
        "factors: W(-1) C(-1)\n"
        "default: smoothing=kneser-ney-mod tau=1 combine=mean\n"
        "graph: lattice\n"
        "node: W(-1) combine=count-select\n");
    CHECK(spec.nodes.size() == 4);
    CHECK(spec.nodes[0].smoothing == Smoothing::KneserNeyMod);
    CHECK(spec.nodes[0].tau == 1);
    int word_factor = static_cast<int>(
        std::find_if(spec.factors.begin(), spec.factors.end(),
                     [](const FactorRef& f) { return f.kind == FactorKind::Word; }) -
        spec.factors.begin());
    int idx = spec.node_index({word_factor});
    REQUIRE(idx >= 0);
    CHECK(spec.nodes[static_cast<std::size_t>(idx)].combine == Combine::CountSelect);
  }
  SUBCASE("explicit graph") {
    FlmSpec spec = FlmSpec::parse(
        "factors: W(-1) P(-1)\n"
        "node: W(-1) P(-1)\n"
        "node: W(-1)\n"
        "node: -\n"
        "edge: W(-1) P(-1) -> W(-1)\n"
        "edge: W(-1) -> -\n");
    CHECK(spec.nodes.size() == 3);
    CHECK(spec.children[0] == std::vector<int>{1});
  }
  SUBCASE("parse errors") {
    // unknown factor in a node
    CHECK_THROWS_WITH_AS(FlmSpec::parse("factors: W(-1)\nnode: C(-1)\nnode: -\n"
                                        "edge: C(-1) -> -\n"),
                         doctest::Contains("unknown factor"), ParseError);
    // dangling edge endpoint
    CHECK_THROWS_AS(FlmSpec::parse("factors: W(-1)\nnode: W(-1)\nnode: -\n"
                                   "edge: W(-1) -> -\nedge: - -> W(-1)\n"),
                    Error);
    // no path to the unigram node
    CHECK_THROWS_WITH_AS(FlmSpec::parse("factors: W(-1)\nnode: W(-1)\n"),
                         doctest::Contains("no backoff edge"), InvalidArgument);
    // unreachable node
    CHECK_THROWS_WITH_AS(
        FlmSpec::parse("factors: W(-1) P(-1)\nnode: W(-1) P(-1)\nnode: W(-1)\n"
                       "node: P(-1)\nnode: -\nedge: W(-1) P(-1) -> W(-1)\n"
                       "edge: W(-1) -> -\nedge: P(-1) -> -\n"),
        doctest::Contains("unreachable"), InvalidArgument);
    // edge must drop exactly one factor
    CHECK_THROWS_WITH_AS(
        FlmSpec::parse("factors: W(-1) P(-1)\nnode: W(-1) P(-1)\nnode: -\n"
                       "edge: W(-1) P(-1) -> -\n"),
        doctest::Contains("drop exactly one"), InvalidArgument);
    // unknown option
    CHECK_THROWS_AS(FlmSpec::parse("factors: W(-1)\ngraph: lattice\n"
                                   "node: W(-1) backoff=yes\n"),
                    ParseError);
    // missing factors line
    CHECK_THROWS_AS(FlmSpec::parse("node: W(-1)\n"), ParseError);
  }
}

TEST_CASE("spec text round-trips") {
  FlmSpec spec = FlmSpec::preset("best-seame");
  FlmSpec reparsed = FlmSpec::parse(spec.to_text());
  CHECK(reparsed.factors == spec.factors);
  REQUIRE(reparsed.nodes.size() == spec.nodes.size());
  for (std::size_t i = 0; i < spec.nodes.size(); ++i) {
    CHECK(reparsed.nodes[i].factors == spec.nodes[i].factors);
    CHECK(reparsed.nodes[i].smoothing == spec.nodes[i].smoothing);
    CHECK(reparsed.nodes[i].tau == spec.nodes[i].tau);
    CHECK(reparsed.nodes[i].combine == spec.nodes[i].combine);
  }
  CHECK(reparsed.children == spec.children);
  CHECK(FlmSpec::parse(reparsed.to_text()).to_text() == reparsed.to_text());
}

TEST_CASE("the best-seame preset applies general backoff on small C(-2) nodes") {
  FlmSpec spec = FlmSpec::preset("best-seame");
  spec.validate();
  CHECK(spec.factors.size() == 4);
  int c2 = -1;
  for (std::size_t i = 0; i < spec.factors.size(); ++i) {
    if (spec.factors[i] == FactorRef{FactorKind::Brown, -2}) c2 = static_cast<int>(i);
  }
  REQUIRE(c2 >= 0);
  for (const auto& node : spec.nodes) {
    bool has_c2 = std::find(node.factors.begin(), node.factors.end(), c2) !=
                  node.factors.end();
    if (has_c2 && node.factors.size() <= 2) {
      CHECK(node.combine == Combine::CountSelect);
    } else {
      CHECK(node.combine == Combine::Mean);
    }
  }
}

TEST_CASE("word-only FLM counts reduce to the bigram count trie") {
  Corpus c = text_corpus({{"a", "b", "a", "c"}, {"b", "a"}});
  FlmSpec spec = word_chain(2, Smoothing::WittenBell, Combine::FixedPath);
  FlmModel flm = FlmModel::train(c, Split::Train, spec);
  NgramModel ngram = NgramModel::train(c, Split::Train, 2, Smoothing::WittenBell);
  // Same tuple space: compare every (context, word) count.
  bool all_equal = true;
  ngram.counts(1).for_each_sorted(
      [&](const std::vector<int>& ctx, const CountTrie::Node& node) {
        for (const auto& [w, count] : node.successors) {
          if (flm.node_counts(0).count(ctx, w) != count) all_equal = false;
        }
      });
  CHECK(all_equal);
  CHECK(flm.node_counts(0).grand_total() == ngram.counts(1).grand_total());
}

TEST_CASE("ML estimate is the raw count ratio") {
  // Context "a" seen 4 times, word "b" once within it.
  Corpus c = text_corpus({{"a", "b", "a", "c", "a", "c", "a", "c"}});
  FlmSpec spec = word_chain(2, Smoothing::MaxLikelihood, Combine::FixedPath);
  FlmModel flm = FlmModel::train(c, Split::Train, spec);
  FlmModel::FactorContext ctx = {flm.vocab().id_of("a")};
  CHECK(flm.prob(ctx, flm.vocab().id_of("b")) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("FLM with word factors and fixed-path backoff equals the n-gram model") {
  Rng rng(909);
  for (int trial = 0; trial < 3; ++trial) {
    std::vector<std::vector<std::string>> utts;
    int n_utts = 6 + static_cast<int>(rng.next_index(6));
    for (int u = 0; u < n_utts; ++u) {
      std::vector<std::string> words;
      int len = 3 + static_cast<int>(rng.next_index(15));
      for (int i = 0; i < len; ++i) {
        words.push_back("w" + std::to_string(rng.next_index(7)));
      }
      utts.push_back(words);
    }
    Corpus c = text_corpus(utts);
    // Separate dev utterances with OOV words exercise the backoff paths.
    std::vector<std::vector<std::string>> dev_utts;
    for (int u = 0; u < 4; ++u) {
      std::vector<std::string> words;
      for (int i = 0; i < 8; ++i) {
        words.push_back(rng.next_double() < 0.15
                            ? "oov" + std::to_string(rng.next_index(3))
                            : "w" + std::to_string(rng.next_index(9)));
      }
      dev_utts.push_back(words);
    }
    Corpus dev = text_corpus(dev_utts, Split::Dev);
    for (const auto& u : dev.utterances) c.add(u, Split::Dev);

    for (Smoothing s : {Smoothing::WittenBell, Smoothing::KneserNeyMod}) {
      for (int order : {2, 3}) {
        NgramModel ngram = NgramModel::train(c, Split::Train, order, s);
        FlmModel flm =
            FlmModel::train(c, Split::Train, word_chain(order, s, Combine::FixedPath));
        for (std::size_t i = 0; i < c.utterances.size(); ++i) {
          if (c.split_of[i] != Split::Dev) continue;
          const Utterance& utt = c.utterances[i];
          for (std::size_t pos = 0; pos <= utt.tokens.size(); ++pos) {
            int wid = pos < utt.tokens.size()
                          ? ngram.vocab().id_of(utt.tokens[pos].word)
                          : Vocabulary::kSentEndId;
            INFO("trial ", trial, " order ", order, " smoothing ", to_string(s),
                 " utt ", i, " pos ", pos);
            double pn = ngram.prob_at(utt, pos, wid);
            double pf = flm.prob_at(utt, pos, wid);
            CHECK(std::abs(pn - pf) <= 1e-9);
          }
        }
      }
    }
  }
}

TEST_CASE("count-select and mean degenerate to fixed-path on a chain") {
  Corpus c = text_corpus({{"a", "b", "c", "a", "b"}, {"c", "a", "b"}});
  Corpus dev = text_corpus({{"b", "a", "zz", "c"}}, Split::Dev);
  for (const auto& u : dev.utterances) c.add(u, Split::Dev);
  FlmModel fixed =
      FlmModel::train(c, Split::Train, word_chain(3, Smoothing::WittenBell, Combine::FixedPath));
  FlmModel select =
      FlmModel::train(c, Split::Train, word_chain(3, Smoothing::WittenBell, Combine::CountSelect));
  FlmModel mean =
      FlmModel::train(c, Split::Train, word_chain(3, Smoothing::WittenBell, Combine::Mean));
  const Utterance& utt = c.utterances.back();
  for (std::size_t pos = 0; pos <= utt.tokens.size(); ++pos) {
    for (int w = 0; w < fixed.vocab().size(); ++w) {
      if (w == Vocabulary::kSentBeginId) continue;
      double pf = fixed.prob_at(utt, pos, w);
      CHECK(select.prob_at(utt, pos, w) == pf);
      CHECK(mean.prob_at(utt, pos, w) == pf);
    }
  }
}

TEST_CASE("every combination strategy yields a normalized distribution") {
  GeneratorConfig cfg;
  cfg.man_vocab_size = 40;
  cfg.en_vocab_size = 40;
  cfg.num_utterances = 60;
  cfg.seed = 501;
  SyntheticCorpus synth = generate_synthetic_cs(cfg);
  Corpus c = synth.corpus;  // has W, L, P factors

  std::vector<FactorRef> factors = {{FactorKind::Word, -1},
                                    {FactorKind::Pos, -1},
                                    {FactorKind::Lid, -1}};
  Rng rng(510);
  for (Combine combine : {Combine::FixedPath, Combine::Mean, Combine::Sum,
                          Combine::Product, Combine::Max, Combine::CountSelect}) {
    for (Smoothing s : {Smoothing::WittenBell, Smoothing::KneserNeyMod}) {
      FlmSpec spec = FlmSpec::lattice(factors, s, 0, combine);
      FlmModel m = FlmModel::train(c, Split::Train, spec);
      for (int probe = 0; probe < 12; ++probe) {
        // Random contexts, including unseen combinations and OOV ids.
        FlmModel::FactorContext ctx(spec.factors.size());
        for (std::size_t f = 0; f < ctx.size(); ++f) {
          ctx[f] = static_cast<int>(rng.next_index(8));
        }
        INFO("combine ", to_string(combine), " smoothing ", to_string(s),
             " probe ", probe);
        CHECK(flm_sum_over_predictions(m, ctx) == doctest::Approx(1.0).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("missing factors are reported with position and factor") {
  Corpus c = text_corpus({{"a", "b"}});  // no P factor
  FlmSpec spec = FlmSpec::lattice({{FactorKind::Word, -1}, {FactorKind::Pos, -1}});
  try {
    FlmModel::train(c, Split::Train, spec);
    FAIL("expected InvalidArgument");
  } catch (const InvalidArgument& e) {
    std::string msg = e.what();
    CHECK(msg.find("missing factor P") != std::string::npos);
    CHECK(msg.find("token 0") != std::string::npos);
  }
}

TEST_CASE("node counts equal brute-force tuple counting") {
  GeneratorConfig cfg;
  cfg.man_vocab_size = 25;
  cfg.en_vocab_size = 25;
  cfg.num_utterances = 25;  // roughly 200+ tokens
  cfg.seed = 502;
  Corpus c = generate_synthetic_cs(cfg).corpus;
  std::vector<FactorRef> factors = {{FactorKind::Word, -1}, {FactorKind::Pos, -1}};
  FlmSpec spec = FlmSpec::lattice(factors);
  FlmModel m = FlmModel::train(c, Split::Train, spec);

  // Brute-force string-tuple recount for the node {P(-1)}.
  int pos_factor = -1;
  for (std::size_t i = 0; i < spec.factors.size(); ++i) {
    if (spec.factors[i].kind == FactorKind::Pos) pos_factor = static_cast<int>(i);
  }
  int node = spec.node_index({pos_factor});
  REQUIRE(node >= 0);
  std::map<std::pair<std::string, std::string>, std::int64_t> recount;
  for (std::size_t i = 0; i < c.utterances.size(); ++i) {
    if (c.split_of[i] != Split::Train) continue;
    const auto& toks = c.utterances[i].tokens;
    for (std::size_t pos = 0; pos <= toks.size(); ++pos) {
      std::string p = pos == 0 ? kSentBegin : *toks[pos - 1].pos;
      std::string w = pos < toks.size() ? toks[pos].word : kSentEnd;
      ++recount[{p, w}];
    }
  }
  std::int64_t checked = 0;
  for (const auto& [key, count] : recount) {
    int pid = m.factor_value_id(pos_factor, key.first);
    int wid = key.second == kSentEnd ? Vocabulary::kSentEndId
                                     : m.vocab().id_of(key.second);
    CHECK(m.node_counts(node).count(std::vector<int>{pid}, wid) == count);
    ++checked;
  }
  CHECK(checked > 50);
  CHECK(m.node_counts(node).grand_total() ==
        static_cast<std::int64_t>(c.token_count(Split::Train) +
                                  c.split_indices(Split::Train).size()));
}

TEST_CASE("FLM save/load identity") {
  GeneratorConfig cfg;
  cfg.man_vocab_size = 20;
  cfg.en_vocab_size = 20;
  cfg.num_utterances = 30;
  cfg.seed = 503;
  Corpus c = generate_synthetic_cs(cfg).corpus;
  FlmSpec spec = FlmSpec::lattice(
      {{FactorKind::Word, -1}, {FactorKind::Pos, -1}, {FactorKind::Lid, -1}},
      Smoothing::KneserNeyMod, 0, Combine::Mean);
  FlmModel m = FlmModel::train(c, Split::Train, spec);
  std::ostringstream first;
  m.save(first);
  std::istringstream in(first.str());
  FlmModel re = FlmModel::load(in);
  std::ostringstream second;
  re.save(second);
  CHECK(first.str() == second.str());
  const Utterance& utt = c.utterances[0];
  for (std::size_t pos = 0; pos <= utt.tokens.size(); ++pos) {
    int wid = pos < utt.tokens.size() ? m.vocab().id_of(utt.tokens[pos].word)
                                      : Vocabulary::kSentEndId;
    CHECK(m.prob_at(utt, pos, wid) == re.prob_at(utt, pos, wid));
  }
}

TEST_CASE("interpolation arithmetic and validation") {
  Corpus c = text_corpus({{"a", "b", "a"}, {"b", "a", "b"}});
  Corpus dev = text_corpus({{"a", "b"}}, Split::Dev);
  for (const auto& u : dev.utterances) c.add(u, Split::Dev);
  auto m1 = std::make_shared<NgramModel>(
      NgramModel::train(c, Split::Train, 2, Smoothing::WittenBell));
  auto m2 = std::make_shared<NgramModel>(
      NgramModel::train(c, Split::Train, 1, Smoothing::WittenBell));

  SUBCASE("weights (1,0) reproduce the first component") {
    auto mix = interpolate({m1, m2}, {1.0, 0.0});
    const Utterance& utt = c.utterances[0];
    for (std::size_t pos = 0; pos <= utt.tokens.size(); ++pos) {
      int wid = pos < utt.tokens.size() ? m1->vocab().id_of(utt.tokens[pos].word)
                                        : Vocabulary::kSentEndId;
      CHECK(mix->prob_at(utt, pos, wid) == m1->prob_at(utt, pos, wid));
    }
  }
  SUBCASE("pointwise mixture arithmetic") {
    auto mix = interpolate({m1, m2}, {0.5, 0.5});
    const Utterance& utt = c.utterances[0];
    int wid = m1->vocab().id_of("b");
    CHECK(mix->prob_at(utt, 1, wid) ==
          doctest::Approx(0.5 * m1->prob_at(utt, 1, wid) + 0.5 * m2->prob_at(utt, 1, wid))
              .epsilon(1e-15));
  }
  SUBCASE("off-simplex weights are rejected") {
    CHECK_THROWS_AS(interpolate({m1, m2}, {0.7, 0.7}), InvalidArgument);
    CHECK_THROWS_AS(interpolate({m1, m2}, {1.5, -0.5}), InvalidArgument);
    CHECK_THROWS_AS(interpolate({m1, m2}, {1.0}), InvalidArgument);
  }
  SUBCASE("tuned weights never lose to the pure components") {
    auto weights = tune_weights({m1, m2}, c, Split::Dev, 0.01);
    auto tuned = interpolate({m1, m2}, weights);
    double tuned_ppl = perplexity(*tuned, c, Split::Dev, "mix").ppl;
    double p1 = perplexity(*m1, c, Split::Dev, "m1").ppl;
    double p2 = perplexity(*m2, c, Split::Dev, "m2").ppl;
    CHECK(tuned_ppl <= std::min(p1, p2));
  }
}

TEST_CASE("the best-seame preset trains and normalizes on an annotated corpus") {
  GeneratorConfig cfg;
  cfg.man_vocab_size = 50;
  cfg.en_vocab_size = 50;
  cfg.num_utterances = 120;
  cfg.seed = 604;
  SyntheticCorpus synth = generate_synthetic_cs(cfg);
  FunctionWordLists lists{synth.function_words_en, synth.function_words_man};
  Corpus corpus = annotate_oc(synth.corpus, OcStrategy::per_speaker(), lists);
  ClusterAssignment brown = brown_cluster(corpus, 8);
  corpus = map_cluster_factor(corpus, brown, FactorKind::Brown);

  FlmModel model = FlmModel::train(corpus, Split::Train, FlmSpec::preset("best-seame"));
  PplReport dev = perplexity(model, corpus, Split::Dev, "best-seame");
  CHECK(dev.ppl >= 1.0);
  Rng rng(605);
  for (int probe = 0; probe < 20; ++probe) {
    FlmModel::FactorContext ctx(model.spec().factors.size());
    for (auto& v : ctx) v = static_cast<int>(rng.next_index(9));
    CHECK(flm_sum_over_predictions(model, ctx) == doctest::Approx(1.0).epsilon(1e-6));
  }
}
