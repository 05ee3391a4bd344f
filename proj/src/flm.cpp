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

#include "csflm/flm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "csflm/corpus.hpp"
#include "csflm/error.hpp"

namespace csflm {

bool FactorRef::older(const FactorRef& a, const FactorRef& b) {
  if (a.lag != b.lag) return a.lag < b.lag;
  return static_cast<int>(a.kind) < static_cast<int>(b.kind);
}

std::string FactorRef::to_string() const {
  return std::string(factor_key(kind)) + "(" + std::to_string(lag) + ")";
}

FactorRef FactorRef::parse(const std::string& s) {
  std::size_t open = s.find('(');
  if (open == std::string::npos || s.empty() || s.back() != ')') {
    throw ParseError("bad factor reference '" + s + "' (expected e.g. W(-1))");
  }
  auto kind = factor_kind_from_key(s.substr(0, open));
  if (!kind) throw ParseError("unknown factor '" + s.substr(0, open) + "'");
  int lag;
  try {
    lag = std::stoi(s.substr(open + 1, s.size() - open - 2));
  } catch (const std::exception&) {
    throw ParseError("bad factor lag in '" + s + "'");
  }
  if (lag > -1 || lag < -9) {
    throw ParseError("factor lag must be in [-9,-1], got '" + s + "'");
  }
  return {*kind, lag};
}

const char* to_string(Combine c) {
  switch (c) {
    case Combine::FixedPath:
      return "fixed-path";
    case Combine::Mean:
      return "mean";
    case Combine::Sum:
      return "sum";
    case Combine::Product:
      return "product";
    case Combine::Max:
      return "max";
    case Combine::CountSelect:
      return "count-select";
  }
  return "mean";
}

Combine combine_from_string(const std::string& s) {
  if (s == "fixed-path") return Combine::FixedPath;
  if (s == "mean") return Combine::Mean;
  if (s == "sum") return Combine::Sum;
  if (s == "product") return Combine::Product;
  if (s == "max") return Combine::Max;
  if (s == "count-select") return Combine::CountSelect;
  throw ParseError("unknown combination strategy '" + s + "'");
}

namespace {

std::vector<FactorRef> canonical_factors(std::vector<FactorRef> factors) {
  std::sort(factors.begin(), factors.end(), FactorRef::older);
  for (std::size_t i = 1; i < factors.size(); ++i) {
    if (factors[i] == factors[i - 1]) {
      throw ParseError("duplicate factor " + factors[i].to_string());
    }
  }
  return factors;
}

}  // namespace

FlmSpec FlmSpec::lattice(std::vector<FactorRef> factors, Smoothing smoothing,
                         std::int64_t tau, Combine combine) {
  FlmSpec spec;
  spec.factors = canonical_factors(std::move(factors));
  const int n = static_cast<int>(spec.factors.size());
  // Subsets ordered by size descending so nodes[0] is the root; ties by
  // ascending bitmask for determinism.
  std::vector<unsigned> masks;
  for (unsigned m = 0; m < (1u << n); ++m) masks.push_back(m);
  std::sort(masks.begin(), masks.end(), [](unsigned a, unsigned b) {
    int pa = __builtin_popcount(a), pb = __builtin_popcount(b);
    if (pa != pb) return pa > pb;
    return a < b;
  });
  std::map<unsigned, int> index_of;
  for (unsigned m : masks) {
    FlmNodeSpec node;
    node.smoothing = smoothing;
    node.tau = tau;
    node.combine = combine;
    for (int i = 0; i < n; ++i) {
      if (m & (1u << i)) node.factors.push_back(i);
    }
    index_of[m] = static_cast<int>(spec.nodes.size());
    spec.nodes.push_back(std::move(node));
  }
  spec.children.resize(spec.nodes.size());
  for (std::size_t idx = 0; idx < spec.nodes.size(); ++idx) {
    unsigned m = masks[idx];
    // Children in factor order: dropping the oldest factor first.
    for (int i = 0; i < n; ++i) {
      if (m & (1u << i)) {
        spec.children[idx].push_back(index_of.at(m & ~(1u << i)));
      }
    }
  }
  return spec;
}

FlmSpec FlmSpec::preset(const std::string& name) {
  if (name == "best-seame") {
    // Conditioning factors OC(-1), C(-1), C(-2), P(-1) over the full backoff
    // lattice; averaging everywhere except that small contexts still holding
    // the penultimate cluster factor C(-2) use general (count-based) backoff.
    FlmSpec spec = lattice({FactorRef{FactorKind::Oc, -1},
                            FactorRef{FactorKind::Brown, -1},
                            FactorRef{FactorKind::Brown, -2},
                            FactorRef{FactorKind::Pos, -1}},
                           Smoothing::WittenBell, 0, Combine::Mean);
    for (auto& node : spec.nodes) {
      if (node.factors.size() > 2) continue;
      bool has_c2 = false;
      for (int f : node.factors) {
        if (spec.factors[static_cast<std::size_t>(f)] ==
            FactorRef{FactorKind::Brown, -2}) {
          has_c2 = true;
        }
      }
      if (has_c2) node.combine = Combine::CountSelect;
    }
    return spec;
  }
  throw InvalidArgument("unknown FLM preset '" + name + "'");
}

int FlmSpec::node_index(const std::vector<int>& factor_subset) const {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].factors == factor_subset) return static_cast<int>(i);
  }
  return -1;
}

void FlmSpec::validate() const {
  for (std::size_t i = 1; i < factors.size(); ++i) {
    if (!FactorRef::older(factors[i - 1], factors[i])) {
      throw InvalidArgument("spec factors must be in canonical age order");
    }
  }
  if (nodes.empty()) throw InvalidArgument("spec has no nodes");
  if (children.size() != nodes.size()) {
    throw InvalidArgument("spec children/nodes size mismatch");
  }
  std::vector<int> full(factors.size());
  for (std::size_t i = 0; i < full.size(); ++i) full[i] = static_cast<int>(i);
  if (nodes[0].factors != full) {
    throw InvalidArgument("nodes[0] must be the root (full factor set)");
  }
  std::set<std::vector<int>> seen;
  for (const auto& node : nodes) {
    for (int f : node.factors) {
      if (f < 0 || f >= static_cast<int>(factors.size())) {
        throw InvalidArgument("node references an unknown factor");
      }
    }
    if (!std::is_sorted(node.factors.begin(), node.factors.end())) {
      throw InvalidArgument("node factors must be ascending");
    }
    if (!seen.insert(node.factors).second) {
      throw InvalidArgument("duplicate node in spec");
    }
  }
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (int child : children[i]) {
      if (child < 0 || child >= static_cast<int>(nodes.size())) {
        throw InvalidArgument("edge to undeclared node");
      }
      const auto& a = nodes[i].factors;
      const auto& b = nodes[static_cast<std::size_t>(child)].factors;
      if (a.size() != b.size() + 1 ||
          !std::includes(a.begin(), a.end(), b.begin(), b.end())) {
        throw InvalidArgument("every edge must drop exactly one factor");
      }
    }
  }
  // Reachability from the root; every reachable non-empty node needs a child
  // and some path must reach the empty context.
  std::vector<bool> reachable(nodes.size(), false);
  std::vector<int> stack = {0};
  reachable[0] = true;
  bool empty_reached = false;
  while (!stack.empty()) {
    int cur = stack.back();
    stack.pop_back();
    if (nodes[static_cast<std::size_t>(cur)].factors.empty()) {
      empty_reached = true;
      continue;
    }
    if (children[static_cast<std::size_t>(cur)].empty()) {
      throw InvalidArgument("node has no backoff edge");
    }
    for (int child : children[static_cast<std::size_t>(cur)]) {
      if (!reachable[static_cast<std::size_t>(child)]) {
        reachable[static_cast<std::size_t>(child)] = true;
        stack.push_back(child);
      }
    }
  }
  if (!empty_reached) {
    throw InvalidArgument("no path reaches the empty (unigram) context");
  }
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (!reachable[i]) throw InvalidArgument("unreachable node in spec");
  }
}

namespace {

std::string node_label(const FlmSpec& spec, const std::vector<int>& factors) {
  if (factors.empty()) return "-";
  std::string out;
  for (std::size_t i = 0; i < factors.size(); ++i) {
    if (i) out += ' ';
    out += spec.factors[static_cast<std::size_t>(factors[i])].to_string();
  }
  return out;
}

}  // namespace

std::string FlmSpec::to_text() const {
  std::ostringstream out;
  out << "factors:";
  for (const auto& f : factors) out << ' ' << f.to_string();
  out << '\n';
  for (const auto& node : nodes) {
    out << "node: " << node_label(*this, node.factors)
        << " smoothing=" << csflm::to_string(node.smoothing) << " tau=" << node.tau
        << " combine=" << csflm::to_string(node.combine) << '\n';
  }
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (int child : children[i]) {
      out << "edge: " << node_label(*this, nodes[i].factors) << " -> "
          << node_label(*this, nodes[static_cast<std::size_t>(child)].factors)
          << '\n';
    }
  }
  return out.str();
}

namespace {

struct ParsedOptions {
  std::optional<Smoothing> smoothing;
  std::optional<std::int64_t> tau;
  std::optional<Combine> combine;
};

// Splits "W(-1) C(-1) tau=1" into factor tokens and key=value options.
void parse_node_items(const std::string& text, int line_no,
                      std::vector<std::string>& factor_tokens, ParsedOptions& opts) {
  std::istringstream in(text);
  std::string item;
  while (in >> item) {
    std::size_t eq = item.find('=');
    if (eq == std::string::npos) {
      factor_tokens.push_back(item);
      continue;
    }
    std::string key = item.substr(0, eq);
    std::string value = item.substr(eq + 1);
    try {
      if (key == "smoothing") opts.smoothing = smoothing_from_string(value);
      else if (key == "tau") opts.tau = std::stoll(value);
      else if (key == "combine") opts.combine = combine_from_string(value);
      else throw ParseError("unknown node option '" + key + "'", line_no);
    } catch (const InvalidArgument& e) {
      throw ParseError(e.what(), line_no);
    } catch (const std::invalid_argument&) {
      throw ParseError("bad value for option '" + key + "'", line_no);
    }
  }
}

}  // namespace

FlmSpec FlmSpec::parse(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;

  std::vector<FactorRef> factors;
  bool have_factors = false;
  bool lattice_mode = false;
  ParsedOptions defaults;
  struct NodeDecl {
    std::vector<int> factors;
    ParsedOptions opts;
    int line;
  };
  std::vector<NodeDecl> node_decls;
  std::vector<std::pair<std::vector<int>, std::vector<int>>> edge_decls;

  auto subset_of = [&factors](const std::vector<std::string>& tokens, int ln) {
    std::vector<int> subset;
    for (const auto& t : tokens) {
      if (t == "-") continue;  // empty-context marker
      FactorRef ref;
      try {
        ref = FactorRef::parse(t);
      } catch (const ParseError& e) {
        throw ParseError(e.what(), ln);
      }
      auto it = std::find(factors.begin(), factors.end(), ref);
      if (it == factors.end()) {
        throw ParseError("unknown factor " + ref.to_string() +
                             " (not in the factors: line)", ln);
      }
      subset.push_back(static_cast<int>(it - factors.begin()));
    }
    std::sort(subset.begin(), subset.end());
    if (std::adjacent_find(subset.begin(), subset.end()) != subset.end()) {
      throw ParseError("duplicate factor in node", ln);
    }
    return subset;
  };

  while (std::getline(in, line)) {
    ++line_no;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::size_t last = line.find_last_not_of(" \t\r");
    line = last == std::string::npos ? "" : line.substr(0, last + 1);
    std::size_t first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    line = line.substr(first);

    if (line.rfind("factors:", 0) == 0) {
      std::istringstream fs(line.substr(8));
      std::string tok;
      while (fs >> tok) {
        try {
          factors.push_back(FactorRef::parse(tok));
        } catch (const ParseError& e) {
          throw ParseError(e.what(), line_no);
        }
      }
      factors = canonical_factors(std::move(factors));
      have_factors = true;
    } else if (line.rfind("default:", 0) == 0) {
      std::vector<std::string> none;
      parse_node_items(line.substr(8), line_no, none, defaults);
      if (!none.empty()) {
        throw ParseError("default: line only takes key=value options", line_no);
      }
    } else if (line.rfind("graph:", 0) == 0) {
      std::string mode = line.substr(6);
      mode.erase(0, mode.find_first_not_of(" \t"));
      if (mode != "lattice") throw ParseError("unknown graph mode '" + mode + "'", line_no);
      lattice_mode = true;
    } else if (line.rfind("node:", 0) == 0) {
      if (!have_factors) throw ParseError("node: before factors:", line_no);
      NodeDecl decl;
      decl.line = line_no;
      std::vector<std::string> tokens;
      parse_node_items(line.substr(5), line_no, tokens, decl.opts);
      decl.factors = subset_of(tokens, line_no);
      node_decls.push_back(std::move(decl));
    } else if (line.rfind("edge:", 0) == 0) {
      if (!have_factors) throw ParseError("edge: before factors:", line_no);
      std::string body = line.substr(5);
      std::size_t arrow = body.find("->");
      if (arrow == std::string::npos) {
        throw ParseError("edge: expects 'A -> B'", line_no);
      }
      auto split_tokens = [](const std::string& s) {
        std::istringstream ss(s);
        std::vector<std::string> out;
        std::string t;
        while (ss >> t) out.push_back(t);
        return out;
      };
      edge_decls.emplace_back(subset_of(split_tokens(body.substr(0, arrow)), line_no),
                              subset_of(split_tokens(body.substr(arrow + 2)), line_no));
    } else {
      throw ParseError("unknown spec directive '" + line + "'", line_no);
    }
  }
  if (!have_factors) throw ParseError("spec needs a factors: line");

  FlmSpec spec;
  if (lattice_mode) {
    if (!edge_decls.empty()) {
      throw ParseError("edge: lines are not allowed with graph: lattice");
    }
    spec = lattice(factors, defaults.smoothing.value_or(Smoothing::WittenBell),
                   defaults.tau.value_or(0), defaults.combine.value_or(Combine::Mean));
    for (const auto& decl : node_decls) {
      int idx = spec.node_index(decl.factors);
      if (idx < 0) throw ParseError("node outside the lattice", decl.line);
      auto& node = spec.nodes[static_cast<std::size_t>(idx)];
      if (decl.opts.smoothing) node.smoothing = *decl.opts.smoothing;
      if (decl.opts.tau) node.tau = *decl.opts.tau;
      if (decl.opts.combine) node.combine = *decl.opts.combine;
    }
    spec.validate();
    return spec;
  }

  spec.factors = factors;
  // Root first, then remaining declarations by size descending, preserving
  // declaration order among equals.
  std::vector<int> full(factors.size());
  for (std::size_t i = 0; i < full.size(); ++i) full[i] = static_cast<int>(i);
  std::stable_sort(node_decls.begin(), node_decls.end(),
                   [](const NodeDecl& a, const NodeDecl& b) {
                     return a.factors.size() > b.factors.size();
                   });
  for (const auto& decl : node_decls) {
    FlmNodeSpec node;
    node.factors = decl.factors;
    node.smoothing =
        decl.opts.smoothing.value_or(defaults.smoothing.value_or(Smoothing::WittenBell));
    node.tau = decl.opts.tau.value_or(defaults.tau.value_or(0));
    node.combine = decl.opts.combine.value_or(defaults.combine.value_or(Combine::Mean));
    spec.nodes.push_back(std::move(node));
  }
  if (spec.nodes.empty() || spec.nodes[0].factors != full) {
    throw ParseError("spec must declare the root node (all factors)");
  }
  spec.children.resize(spec.nodes.size());
  for (const auto& [from, to] : edge_decls) {
    int a = spec.node_index(from);
    int b = spec.node_index(to);
    if (a < 0 || b < 0) throw ParseError("edge references an undeclared node");
    spec.children[static_cast<std::size_t>(a)].push_back(b);
  }
  // Canonical child order: by age of the dropped factor, oldest first.
  for (std::size_t i = 0; i < spec.nodes.size(); ++i) {
    const auto& parent = spec.nodes[i].factors;
    auto dropped = [&](int child) {
      const auto& c = spec.nodes[static_cast<std::size_t>(child)].factors;
      for (int f : parent) {
        if (std::find(c.begin(), c.end(), f) == c.end()) return f;
      }
      return -1;
    };
    std::sort(spec.children[i].begin(), spec.children[i].end(),
              [&](int a, int b) { return dropped(a) < dropped(b); });
    spec.children[i].erase(
        std::unique(spec.children[i].begin(), spec.children[i].end()),
        spec.children[i].end());
  }
  spec.validate();
  return spec;
}

FlmSpec FlmSpec::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open FLM spec '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

// ---------------------------------------------------------------------------
// FlmModel

namespace {

constexpr int kBoundaryValueId = 0;  // "<s>" in every non-word factor dict
constexpr int kOovValueId = 1;       // values never seen in training

void kn_discounts_flm(const std::vector<std::int64_t>& n, double& d1, double& d2,
                      double& d3) {
  d1 = 0.5;
  d2 = 1.0;
  d3 = 1.5;
  if (n[1] > 0 && n[1] + 2 * n[2] > 0) {
    double y = static_cast<double>(n[1]) / static_cast<double>(n[1] + 2 * n[2]);
    if (n[2] > 0) d1 = 1.0 - 2.0 * y * static_cast<double>(n[2]) / static_cast<double>(n[1]);
    if (n[2] > 0 && n[3] > 0) {
      d2 = 2.0 - 3.0 * y * static_cast<double>(n[3]) / static_cast<double>(n[2]);
    }
    if (n[3] > 0 && n[4] > 0) {
      d3 = 3.0 - 4.0 * y * static_cast<double>(n[4]) / static_cast<double>(n[3]);
    }
  }
  d1 = std::clamp(d1, 1e-4, 0.9999);
  d2 = std::clamp(d2, 1e-4, 1.9999);
  d3 = std::clamp(d3, 1e-4, 2.9999);
}

}  // namespace

FlmModel FlmModel::train(const Corpus& corpus, Split split, const FlmSpec& spec,
                         std::int64_t min_count) {
  spec.validate();
  auto indices = corpus.split_indices(split);
  if (indices.empty()) throw InvalidArgument("train_flm: empty training split");

  FlmModel model;
  model.spec_ = spec;
  model.min_count_ = min_count;
  {
    Corpus train_only;
    for (std::size_t i : indices) {
      train_only.add(corpus.utterances[i], Split::Train);
    }
    model.vocab_ = build_vocabulary(train_only, min_count);
  }

  // Value dictionaries for the non-word factor kinds in the spec.
  std::set<FactorKind> kinds;
  for (const auto& f : spec.factors) {
    if (f.kind != FactorKind::Word) kinds.insert(f.kind);
  }
  std::map<FactorKind, std::set<std::string>> values;
  for (std::size_t i : indices) {
    const auto& utt = corpus.utterances[i];
    for (std::size_t t = 0; t < utt.tokens.size(); ++t) {
      for (FactorKind kind : kinds) {
        auto v = utt.tokens[t].factor_value(kind);
        if (!v) {
          throw InvalidArgument("train_flm: token " + std::to_string(t) +
                                " of utterance " + std::to_string(i) +
                                " is missing factor " + factor_key(kind));
        }
        values[kind].insert(*v);
      }
    }
  }
  for (FactorKind kind : kinds) {
    auto& dict = model.factor_dicts_[kind];
    dict[kSentBegin] = kBoundaryValueId;
    int next = kOovValueId + 1;
    for (const auto& v : values[kind]) {
      if (v == kSentBegin) continue;
      dict[v] = next++;
    }
  }

  for (const auto& node : spec.nodes) {
    model.tries_.emplace_back(static_cast<int>(node.factors.size()));
  }
  for (std::size_t i : indices) {
    const auto& utt = corpus.utterances[i];
    for (std::size_t pos = 0; pos <= utt.tokens.size(); ++pos) {
      FactorContext ctx = model.context_at(utt, pos);
      int word = pos < utt.tokens.size()
                     ? model.vocab_.id_of(utt.tokens[pos].word)
                     : Vocabulary::kSentEndId;
      for (std::size_t n = 0; n < spec.nodes.size(); ++n) {
        std::vector<int> proj = model.project(static_cast<int>(n), ctx);
        model.tries_[n].add(proj, word);
      }
    }
  }
  model.finalize();
  return model;
}

int FlmModel::factor_value_id(int factor_index, const std::string& value) const {
  const FactorRef& ref = spec_.factors.at(static_cast<std::size_t>(factor_index));
  if (ref.kind == FactorKind::Word) return vocab_.id_of(value);
  const auto& dict = factor_dicts_.at(ref.kind);
  auto it = dict.find(value);
  return it == dict.end() ? kOovValueId : it->second;
}

FlmModel::FactorContext FlmModel::context_at(const Utterance& utt,
                                             std::size_t pos) const {
  FactorContext ctx(spec_.factors.size());
  for (std::size_t i = 0; i < spec_.factors.size(); ++i) {
    const FactorRef& ref = spec_.factors[i];
    std::int64_t tpos = static_cast<std::int64_t>(pos) + ref.lag;
    if (tpos < 0) {
      ctx[i] = ref.kind == FactorKind::Word ? Vocabulary::kSentBeginId
                                            : kBoundaryValueId;
      continue;
    }
    const FactoredToken& tok = utt.tokens.at(static_cast<std::size_t>(tpos));
    if (ref.kind == FactorKind::Word) {
      ctx[i] = vocab_.id_of(tok.word);
      continue;
    }
    auto v = tok.factor_value(ref.kind);
    if (!v) {
      throw InvalidArgument("token " + std::to_string(tpos) +
                            " is missing factor " + factor_key(ref.kind));
    }
    ctx[i] = factor_value_id(static_cast<int>(i), *v);
  }
  return ctx;
}

std::vector<int> FlmModel::project(int node, const FactorContext& context) const {
  const auto& fs = spec_.nodes[static_cast<std::size_t>(node)].factors;
  std::vector<int> out(fs.size());
  for (std::size_t i = 0; i < fs.size(); ++i) {
    out[i] = context[static_cast<std::size_t>(fs[i])];
  }
  return out;
}

double FlmModel::discounted(int node, std::int64_t c,
                            const CountTrie::Node& n) const {
  const auto& ns = spec_.nodes[static_cast<std::size_t>(node)];
  double cnt = static_cast<double>(n.total);
  switch (ns.smoothing) {
    case Smoothing::WittenBell:
      return static_cast<double>(c) /
             (cnt + static_cast<double>(n.successors.size()));
    case Smoothing::KneserNeyMod: {
      std::size_t i = static_cast<std::size_t>(node);
      double d = c == 1 ? discount1_[i] : c == 2 ? discount2_[i] : discount3_[i];
      return (static_cast<double>(c) - d) / cnt;
    }
    case Smoothing::MaxLikelihood:
      return static_cast<double>(c) / cnt;
  }
  return 0.0;
}

double FlmModel::reserved_mass(int node, const CountTrie::Node& n) const {
  const auto& ns = spec_.nodes[static_cast<std::size_t>(node)];
  double cnt = static_cast<double>(n.total);
  switch (ns.smoothing) {
    case Smoothing::WittenBell:
      return static_cast<double>(n.successors.size()) /
             (cnt + static_cast<double>(n.successors.size()));
    case Smoothing::KneserNeyMod: {
      std::size_t i = static_cast<std::size_t>(node);
      std::int64_t n1 = 0, n2 = 0, n3p = 0;
      for (const auto& [_, c] : n.successors) {
        if (c == 1) ++n1;
        else if (c == 2) ++n2;
        else ++n3p;
      }
      return (discount1_[i] * static_cast<double>(n1) +
              discount2_[i] * static_cast<double>(n2) +
              discount3_[i] * static_cast<double>(n3p)) /
             cnt;
    }
    case Smoothing::MaxLikelihood:
      return 0.0;
  }
  return 0.0;
}

void FlmModel::finalize() {
  const std::size_t n_nodes = spec_.nodes.size();
  discount1_.assign(n_nodes, 0.0);
  discount2_.assign(n_nodes, 0.0);
  discount3_.assign(n_nodes, 0.0);
  for (std::size_t i = 0; i < n_nodes; ++i) {
    if (spec_.nodes[i].smoothing == Smoothing::KneserNeyMod) {
      auto coc = tries_[i].count_of_counts(4);
      kn_discounts_flm(coc, discount1_[i], discount2_[i], discount3_[i]);
    }
    if (spec_.nodes[i].factors.empty()) unigram_node_ = static_cast<int>(i);
  }
  if (unigram_node_ < 0) throw InvalidArgument("spec has no unigram node");

  // Unigram backoff mass, as in the n-gram model.
  {
    CountTrie::Node* root = tries_[static_cast<std::size_t>(unigram_node_)]
                                .find_mutable(std::span<const int>{});
    if (!root) throw Error("FLM training produced no events");
    int unseen = num_prediction_ids() - static_cast<int>(root->successors.size());
    unigram_rescale_ = 1.0;
    if (unseen == 0) {
      double seen_mass = 0.0;
      for (const auto& [w, c] : root->successors) {
        seen_mass += discounted(unigram_node_, c, *root);
      }
      unigram_rescale_ = 1.0 / seen_mass;
      root->alpha = 0.0;
    } else {
      root->alpha = reserved_mass(unigram_node_, *root) *
                    static_cast<double>(num_prediction_ids()) /
                    static_cast<double>(unseen);
    }
  }

  // Backoff weights bottom-up: smaller factor sets first so that child
  // distributions are final when a parent's weights are computed.
  std::vector<int> order;
  for (std::size_t i = 0; i < n_nodes; ++i) order.push_back(static_cast<int>(i));
  std::sort(order.begin(), order.end(), [this](int a, int b) {
    return spec_.nodes[static_cast<std::size_t>(a)].factors.size() <
           spec_.nodes[static_cast<std::size_t>(b)].factors.size();
  });
  for (int node : order) {
    if (node == unigram_node_) continue;
    const auto& fs = spec_.nodes[static_cast<std::size_t>(node)].factors;
    tries_[static_cast<std::size_t>(node)].for_each_mutable(
        [this, node, &fs](const std::vector<int>& proj, CountTrie::Node& data) {
          // Rebuild a full context carrying only this node's slots; the
          // descendants only ever read a subset of them.
          FactorContext ctx(spec_.factors.size(), -1);
          for (std::size_t i = 0; i < fs.size(); ++i) {
            ctx[static_cast<std::size_t>(fs[i])] = proj[i];
          }
          double seen_lower = 0.0;
          for (const auto& [w, _] : data.successors) {
            seen_lower += combined_children(node, ctx, w);
          }
          double denom = std::max(1.0 - seen_lower, 1e-300);
          data.alpha = reserved_mass(node, data) / denom;
        });
  }
}

double FlmModel::child_normalizer(int node, const FactorContext& context) const {
  std::vector<int> proj = project(node, context);
  {
    std::lock_guard<std::mutex> lock(z_cache_->mutex);
    auto it = z_cache_->values.find({node, proj});
    if (it != z_cache_->values.end()) return it->second;
  }
  const auto& ns = spec_.nodes[static_cast<std::size_t>(node)];
  const auto& kids = spec_.children[static_cast<std::size_t>(node)];
  double z = 0.0;
  for (int w = 0; w < vocab_.size(); ++w) {
    if (w == Vocabulary::kSentBeginId) continue;
    double combined;
    if (ns.combine == Combine::Product) {
      combined = 1.0;
      for (int child : kids) combined *= node_prob(child, context, w);
    } else if (ns.combine == Combine::Max) {
      combined = 0.0;
      for (int child : kids) combined = std::max(combined, node_prob(child, context, w));
    } else {  // Sum
      combined = 0.0;
      for (int child : kids) combined += node_prob(child, context, w);
    }
    z += combined;
  }
  std::lock_guard<std::mutex> lock(z_cache_->mutex);
  z_cache_->values.insert({{node, std::move(proj)}, z});
  return z;
}

double FlmModel::combined_children(int node, const FactorContext& context,
                                   int word_id) const {
  const auto& ns = spec_.nodes[static_cast<std::size_t>(node)];
  const auto& kids = spec_.children[static_cast<std::size_t>(node)];
  switch (ns.combine) {
    case Combine::FixedPath:
      return node_prob(kids.front(), context, word_id);
    case Combine::CountSelect: {
      // The child whose dropped-factor marginal context is best supported;
      // ties keep the earliest child, i.e. the one dropping the oldest factor.
      int best = kids.front();
      std::int64_t best_count = -1;
      for (int child : kids) {
        std::int64_t c = tries_[static_cast<std::size_t>(child)].context_total(
            project(child, context));
        if (c > best_count) {
          best = child;
          best_count = c;
        }
      }
      return node_prob(best, context, word_id);
    }
    case Combine::Mean: {
      double sum = 0.0;
      for (int child : kids) sum += node_prob(child, context, word_id);
      return sum / static_cast<double>(kids.size());
    }
    case Combine::Sum: {
      double sum = 0.0;
      for (int child : kids) sum += node_prob(child, context, word_id);
      return sum / child_normalizer(node, context);
    }
    case Combine::Product: {
      double prod = 1.0;
      for (int child : kids) prod *= node_prob(child, context, word_id);
      return prod / child_normalizer(node, context);
    }
    case Combine::Max: {
      double m = 0.0;
      for (int child : kids) m = std::max(m, node_prob(child, context, word_id));
      return m / child_normalizer(node, context);
    }
  }
  return 0.0;
}

double FlmModel::node_prob(int node, const FactorContext& context,
                           int word_id) const {
  const CountTrie& trie = tries_[static_cast<std::size_t>(node)];
  if (node == unigram_node_) {
    const CountTrie::Node* data = trie.find(std::span<const int>{});
    auto it = data->successors.find(word_id);
    if (it != data->successors.end()) {
      return discounted(node, it->second, *data) * unigram_rescale_;
    }
    return data->alpha / static_cast<double>(num_prediction_ids());
  }
  std::vector<int> proj = project(node, context);
  const CountTrie::Node* data = trie.find(proj);
  const std::int64_t tau = spec_.nodes[static_cast<std::size_t>(node)].tau;
  if (!data || data->total <= tau) return combined_children(node, context, word_id);
  auto it = data->successors.find(word_id);
  if (it != data->successors.end()) return discounted(node, it->second, *data);
  return data->alpha * combined_children(node, context, word_id);
}

double FlmModel::prob(const FactorContext& context, int word_id) const {
  if (context.size() != spec_.factors.size()) {
    throw InvalidArgument("FLM context arity mismatch");
  }
  return node_prob(0, context, word_id);
}

double FlmModel::prob_at(const Utterance& utt, std::size_t pos,
                         int word_id) const {
  return prob(context_at(utt, pos), word_id);
}

void FlmModel::save(std::ostream& out) const {
  out << "csflm-model 1\n";
  out << "kind flm\n";
  out << "min_count " << min_count_ << '\n';
  std::string spec_text = spec_.to_text();
  std::int64_t spec_lines = 0;
  for (char c : spec_text) spec_lines += c == '\n';
  out << "spec " << spec_lines << '\n' << spec_text;
  out << "vocab " << vocab_.num_known_words() << '\n';
  for (int id = Vocabulary::kFirstWordId; id < vocab_.size(); ++id) {
    out << vocab_.word_of(id) << ' ' << vocab_.count_of(id) << '\n';
  }
  out << "dicts " << factor_dicts_.size() << '\n';
  for (const auto& [kind, dict] : factor_dicts_) {
    // Values in id order, reserved ids skipped.
    std::vector<const std::string*> by_id(dict.size() + 2, nullptr);
    int max_id = 0;
    for (const auto& [value, id] : dict) {
      if (id >= static_cast<int>(by_id.size())) by_id.resize(static_cast<std::size_t>(id) + 1);
      by_id[static_cast<std::size_t>(id)] = &value;
      max_id = std::max(max_id, id);
    }
    out << "dict " << factor_key(kind) << ' ' << std::max(0, max_id - kOovValueId)
        << '\n';
    for (int id = kOovValueId + 1; id <= max_id; ++id) {
      out << *by_id[static_cast<std::size_t>(id)] << '\n';
    }
  }
  const CountTrie& root = tries_[0];
  std::int64_t lines = 0;
  root.for_each_sorted([&lines](const std::vector<int>&, const CountTrie::Node& n) {
    lines += static_cast<std::int64_t>(n.successors.size());
  });
  out << "counts " << lines << '\n';
  root.for_each_sorted([&out](const std::vector<int>& ctx, const CountTrie::Node& n) {
    for (const auto& [w, c] : n.successors) {
      for (int v : ctx) out << v << ' ';
      out << w << ' ' << c << '\n';
    }
  });
}

FlmModel FlmModel::load(std::istream& in) {
  std::string line;
  auto next_line = [&in, &line](const std::string& what) {
    if (!std::getline(in, line)) throw ParseError("model file: missing " + what);
    return line;
  };
  if (next_line("header") != "csflm-model 1") throw ParseError("model file: bad header");
  if (next_line("kind") != "kind flm") throw ParseError("model file: not an FLM");
  auto field = [&next_line](const std::string& key) {
    std::string l = next_line(key);
    if (l.rfind(key + " ", 0) != 0) throw ParseError("model file: expected " + key);
    return l.substr(key.size() + 1);
  };
  FlmModel model;
  model.min_count_ = std::stoll(field("min_count"));
  std::int64_t spec_lines = std::stoll(field("spec"));
  std::string spec_text;
  for (std::int64_t i = 0; i < spec_lines; ++i) {
    spec_text += next_line("spec body");
    spec_text += '\n';
  }
  model.spec_ = FlmSpec::parse(spec_text);
  std::int64_t vocab_size = std::stoll(field("vocab"));
  for (std::int64_t i = 0; i < vocab_size; ++i) {
    std::istringstream row(next_line("vocab entry"));
    std::string word;
    std::int64_t count;
    if (!(row >> word >> count)) throw ParseError("model file: bad vocab entry");
    model.vocab_.add_word(word, count);
  }
  std::int64_t dicts = std::stoll(field("dicts"));
  for (std::int64_t d = 0; d < dicts; ++d) {
    std::istringstream row(next_line("dict header"));
    std::string tag, key;
    std::int64_t entries;
    if (!(row >> tag >> key >> entries) || tag != "dict") {
      throw ParseError("model file: bad dict header");
    }
    auto kind = factor_kind_from_key(key);
    if (!kind) throw ParseError("model file: unknown dict kind " + key);
    auto& dict = model.factor_dicts_[*kind];
    dict[kSentBegin] = kBoundaryValueId;
    for (std::int64_t i = 0; i < entries; ++i) {
      dict[next_line("dict entry")] = kOovValueId + 1 + static_cast<int>(i);
    }
  }
  for (const auto& node : model.spec_.nodes) {
    model.tries_.emplace_back(static_cast<int>(node.factors.size()));
  }
  std::int64_t lines = std::stoll(field("counts"));
  std::vector<int> ids(model.spec_.factors.size() + 1);
  for (std::int64_t i = 0; i < lines; ++i) {
    std::istringstream row(next_line("count entry"));
    for (auto& v : ids) {
      if (!(row >> v)) throw ParseError("model file: bad count entry");
    }
    std::int64_t c;
    if (!(row >> c)) throw ParseError("model file: bad count entry");
    FactorContext ctx(ids.begin(), ids.end() - 1);
    int word = ids.back();
    for (std::size_t n = 0; n < model.spec_.nodes.size(); ++n) {
      model.tries_[n].add(model.project(static_cast<int>(n), ctx), word, c);
    }
  }
  model.finalize();
  return model;
}

}  // namespace csflm
