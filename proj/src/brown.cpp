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

#include "csflm/brown.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "csflm/error.hpp"

namespace csflm {

void BigramTable::check() const {
  std::int64_t sum = 0;
  for (std::size_t i = 0; i < size(); ++i) {
    std::int64_t row = 0, col = 0;
    for (std::size_t j = 0; j < size(); ++j) {
      row += pair[i][j];
      col += pair[j][i];
      if (pair[i][j] < 0) throw InvalidArgument("bigram table: negative count");
      sum += pair[i][j];
    }
    if (row != left[i] || col != right[i]) {
      throw InvalidArgument("bigram table: marginals out of sync");
    }
  }
  if (sum != total) throw InvalidArgument("bigram table: total out of sync");
}

double avg_mutual_information(const BigramTable& table) {
  if (table.total <= 0) {
    throw InvalidArgument("avg_mutual_information requires bigram counts");
  }
  const double t = static_cast<double>(table.total);
  double ami = 0.0;
  for (std::size_t i = 0; i < table.size(); ++i) {
    for (std::size_t j = 0; j < table.size(); ++j) {
      std::int64_t n = table.pair[i][j];
      if (n == 0) continue;
      double p = static_cast<double>(n) / t;
      ami += p * std::log2(static_cast<double>(n) * t /
                           (static_cast<double>(table.left[i]) *
                            static_cast<double>(table.right[j])));
    }
  }
  return ami;
}

namespace {

// One mutual-information term from raw counts; 0 when the pair is unseen.
inline double q_term(std::int64_t n, std::int64_t row, std::int64_t col, double t) {
  if (n == 0) return 0.0;
  double p = static_cast<double>(n) / t;
  return p * std::log2(static_cast<double>(n) * t /
                       (static_cast<double>(row) * static_cast<double>(col)));
}

struct Candidate {
  std::size_t a = 0, b = 0;  // slot indices
  double loss = 0.0;
  bool valid = false;
};

// Greedy clustering state: a dense class-bigram table over live slots plus
// per-word adjacency lists for incremental insertion of new words.
class BrownState {
 public:
  BrownState(const Corpus& corpus,
             const std::vector<std::string>& words_by_rank)
      : words_(words_by_rank) {
    std::unordered_map<std::string, int> wid;
    for (std::size_t i = 0; i < words_.size(); ++i) {
      wid[words_[i]] = static_cast<int>(i);
    }
    successors_.resize(words_.size());
    predecessors_.resize(words_.size());
    std::map<std::pair<int, int>, std::int64_t> bigrams;
    for (const auto& utt : corpus.utterances) {
      for (std::size_t t = 0; t + 1 < utt.tokens.size(); ++t) {
        ++bigrams[{wid[utt.tokens[t].word], wid[utt.tokens[t + 1].word]}];
      }
    }
    for (const auto& [key, count] : bigrams) {
      successors_[key.first].push_back({key.second, count});
      predecessors_[key.second].push_back({key.first, count});
    }
    slot_of_word_.assign(words_.size(), -1);
  }

  // Adds word w (by rank index) as a fresh singleton cluster.
  void add_word_cluster(int w, int stable_id) {
    std::size_t u = ids_.size();
    ids_.push_back(stable_id);
    member_words_.push_back({w});
    grow_table();
    // Bigrams between w and already-assigned words (including w itself).
    for (const auto& [v, count] : successors_[w]) {
      int sv = v == w ? static_cast<int>(u) : slot_of_word_[v];
      if (sv < 0) continue;
      add_count(u, static_cast<std::size_t>(sv), count);
    }
    for (const auto& [v, count] : predecessors_[w]) {
      if (v == w) continue;  // already handled via successors
      int sv = slot_of_word_[v];
      if (sv < 0) continue;
      add_count(static_cast<std::size_t>(sv), u, count);
    }
    slot_of_word_[w] = static_cast<int>(u);
  }

  // Loss of merging slots a and b, evaluated fresh from the integer counts.
  double merge_loss(std::size_t a, std::size_t b, const std::vector<double>& rq,
                    const std::vector<double>& cq,
                    const std::vector<std::vector<double>>& q) const {
    const double t = static_cast<double>(table_.total);
    if (table_.total == 0) return 0.0;
    double removed = rq[a] + rq[b] + cq[a] + cq[b] - q[a][a] - q[a][b] -
                     q[b][a] - q[b][b];
    std::int64_t row_u = table_.left[a] + table_.left[b];
    std::int64_t col_u = table_.right[a] + table_.right[b];
    double added = 0.0;
    for (std::size_t k = 0; k < ids_.size(); ++k) {
      if (k == a || k == b) continue;
      added += q_term(table_.pair[a][k] + table_.pair[b][k], row_u,
                      table_.right[k], t);
      added += q_term(table_.pair[k][a] + table_.pair[k][b], table_.left[k],
                      col_u, t);
    }
    added += q_term(table_.pair[a][a] + table_.pair[a][b] + table_.pair[b][a] +
                        table_.pair[b][b],
                    row_u, col_u, t);
    return removed - added;
  }

  // Finds and performs the loss-minimizing merge; ties break on the smallest
  // (left, right) stable-id pair.
  BrownMerge merge_best(BrownTrace* trace) {
    std::vector<double> rq, cq;
    std::vector<std::vector<double>> q;
    build_q(q, rq, cq);
    Candidate best;
    for (std::size_t a = 0; a < ids_.size(); ++a) {
      for (std::size_t b = 0; b < ids_.size(); ++b) {
        if (a == b) continue;
        int ia = ids_[a], ib = ids_[b];
        if (ia > ib) continue;  // evaluate each pair once, ordered by id
        double loss = merge_loss(a, b, rq, cq, q);
        bool better = false;
        if (!best.valid || loss < best.loss) {
          better = true;
        } else if (loss == best.loss) {
          int bia = ids_[best.a], bib = ids_[best.b];
          better = ia < bia || (ia == bia && ib < bib);
        }
        if (better) best = {a, b, loss, true};
      }
    }
    if (trace && trace->record_tables) {
      trace->tables_before.push_back(table_);
      trace->ids_before.push_back(ids_);
    }
    BrownMerge merge{ids_[best.a], ids_[best.b], best.loss};
    apply_merge(best.a, best.b);
    return merge;
  }

  const BigramTable& table() const { return table_; }
  const std::vector<int>& ids() const { return ids_; }
  std::size_t num_clusters() const { return ids_.size(); }
  const std::vector<std::vector<int>>& member_words() const {
    return member_words_;
  }
  const std::vector<std::string>& words() const { return words_; }

 private:
  void grow_table() {
    std::size_t n = ids_.size();
    table_.pair.resize(n);
    for (auto& row : table_.pair) row.resize(n, 0);
    table_.left.resize(n, 0);
    table_.right.resize(n, 0);
  }

  void add_count(std::size_t a, std::size_t b, std::int64_t count) {
    table_.pair[a][b] += count;
    table_.left[a] += count;
    table_.right[b] += count;
    table_.total += count;
  }

  void build_q(std::vector<std::vector<double>>& q, std::vector<double>& rq,
               std::vector<double>& cq) const {
    const std::size_t n = ids_.size();
    const double t = static_cast<double>(table_.total);
    q.assign(n, std::vector<double>(n, 0.0));
    rq.assign(n, 0.0);
    cq.assign(n, 0.0);
    if (table_.total == 0) return;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        double v = q_term(table_.pair[i][j], table_.left[i], table_.right[j], t);
        q[i][j] = v;
        rq[i] += v;
        cq[j] += v;
      }
    }
  }

  // Merges slot b into slot a (the merged cluster keeps the smaller stable
  // id), then swap-removes slot b.
  void apply_merge(std::size_t a, std::size_t b) {
    const std::size_t n = ids_.size();
    for (std::size_t k = 0; k < n; ++k) {
      table_.pair[a][k] += table_.pair[b][k];
      table_.pair[b][k] = 0;
    }
    for (std::size_t k = 0; k < n; ++k) {
      table_.pair[k][a] += table_.pair[k][b];
      table_.pair[k][b] = 0;
    }
    table_.left[a] += table_.left[b];
    table_.right[a] += table_.right[b];
    for (int w : member_words_[b]) {
      slot_of_word_[w] = static_cast<int>(a);
      member_words_[a].push_back(w);
    }
    std::size_t last = n - 1;
    if (b != last) {
      // Move the last slot into b's place.
      for (std::size_t k = 0; k < n; ++k) {
        table_.pair[b][k] = table_.pair[last][k];
        table_.pair[last][k] = 0;
      }
      // For k == b this reads the moved row, so the diagonal lands on
      // pair[b][b] as required.
      for (std::size_t k = 0; k < n; ++k) {
        table_.pair[k][b] = table_.pair[k][last];
        table_.pair[k][last] = 0;
      }
      table_.left[b] = table_.left[last];
      table_.right[b] = table_.right[last];
      ids_[b] = ids_[last];
      member_words_[b] = std::move(member_words_[last]);
      for (int w : member_words_[b]) slot_of_word_[w] = static_cast<int>(b);
    }
    ids_.pop_back();
    member_words_.pop_back();
    table_.pair.pop_back();
    for (auto& row : table_.pair) row.pop_back();
    table_.left.pop_back();
    table_.right.pop_back();
  }

  std::vector<std::string> words_;  // by frequency rank
  std::vector<std::vector<std::pair<int, std::int64_t>>> successors_;
  std::vector<std::vector<std::pair<int, std::int64_t>>> predecessors_;
  std::vector<int> slot_of_word_;

  BigramTable table_;
  std::vector<int> ids_;                       // stable id per live slot
  std::vector<std::vector<int>> member_words_;  // word rank indices per slot
};

}  // namespace

ClusterAssignment brown_cluster(const Corpus& corpus, int num_classes,
                                BrownTrace* trace) {
  if (num_classes < 1) throw InvalidArgument("brown_cluster: num_classes < 1");
  std::map<std::string, std::int64_t> freq;
  for (const auto& utt : corpus.utterances) {
    for (const auto& tok : utt.tokens) ++freq[tok.word];
  }
  std::vector<std::string> words;
  words.reserve(freq.size());
  for (const auto& [w, _] : freq) words.push_back(w);
  std::stable_sort(words.begin(), words.end(),
                   [&freq](const std::string& a, const std::string& b) {
                     if (freq[a] != freq[b]) return freq[a] > freq[b];
                     return a < b;
                   });
  if (static_cast<int>(words.size()) < num_classes) {
    throw InvalidArgument("brown_cluster: fewer than " +
                          std::to_string(num_classes) + " distinct words");
  }

  BrownState state(corpus, words);
  int next_id = 0;
  int seeded = 0;
  for (; seeded < num_classes; ++seeded) {
    state.add_word_cluster(seeded, next_id++);
  }
  for (int w = seeded; w < static_cast<int>(words.size()); ++w) {
    state.add_word_cluster(w, next_id++);
    BrownMerge merge = state.merge_best(trace);
    if (trace) trace->merges.push_back(merge);
  }

  // Final clusters renumbered 0..C-1 in stable-id order.
  std::vector<std::size_t> order(state.num_clusters());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&state](std::size_t a, std::size_t b) {
    return state.ids()[a] < state.ids()[b];
  });
  ClusterAssignment assignment("brown");
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    for (int w : state.member_words()[order[rank]]) {
      assignment.assign(state.words()[static_cast<std::size_t>(w)],
                        static_cast<int>(rank));
    }
  }
  if (trace) {
    trace->final_table = state.table();
    trace->final_ids = state.ids();
    trace->final_ami =
        state.table().total > 0 ? avg_mutual_information(state.table()) : 0.0;
  }
  return assignment;
}

Corpus restrict_to_open_class(const Corpus& corpus, const FunctionWordLists& lists) {
  Corpus out;
  for (std::size_t i = 0; i < corpus.utterances.size(); ++i) {
    Utterance filtered;
    filtered.speaker = corpus.utterances[i].speaker;
    for (const auto& tok : corpus.utterances[i].tokens) {
      if (!tok.lid) {
        throw InvalidArgument("restrict_to_open_class requires LIDs");
      }
      if (is_open_class(tok.word, lists, *tok.lid)) {
        filtered.tokens.push_back(tok);
      }
    }
    if (!filtered.tokens.empty()) {
      out.add(std::move(filtered), corpus.split_of[i]);
    }
  }
  return out;
}

}  // namespace csflm
