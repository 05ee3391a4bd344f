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

#ifndef CSFLM_BROWN_HPP
#define CSFLM_BROWN_HPP

#include <cstdint>
#include <vector>

#include "csflm/annotate.hpp"
#include "csflm/clusters.hpp"
#include "csflm/corpus.hpp"

namespace csflm {

// Class-bigram statistics over the currently assigned clusters. Bigrams are
// adjacent token pairs within an utterance; sentence boundaries do not
// participate.
struct BigramTable {
  std::vector<std::vector<std::int64_t>> pair;  // [left][right]
  std::vector<std::int64_t> left;               // row marginals
  std::vector<std::int64_t> right;              // column marginals
  std::int64_t total = 0;

  std::size_t size() const { return pair.size(); }
  // Verifies marginal and total consistency; throws InvalidArgument.
  void check() const;
};

// Average mutual information between adjacent classes, in bits:
//   I = sum_{c1,c2} P(c1 c2) * log2( P(c2|c1) / P(c2) )
// Zero-count pairs contribute nothing. Requires total > 0.
double avg_mutual_information(const BigramTable& table);

struct BrownMerge {
  int left_id;   // stable cluster ids, left_id < right_id
  int right_id;
  double loss;   // AMI before - AMI after this merge
};

// Optional instrumentation for brown_cluster. When record_tables is set the
// table and live cluster ids are snapshotted before every merge, which lets
// tests replay each decision exhaustively.
struct BrownTrace {
  bool record_tables = false;
  std::vector<BrownMerge> merges;
  std::vector<BigramTable> tables_before;
  std::vector<std::vector<int>> ids_before;
  BigramTable final_table;
  std::vector<int> final_ids;
  double final_ami = 0.0;
};

// Greedy Brown clustering: the C most frequent words seed singleton classes;
// each next most frequent word becomes a temporary (C+1)-th class and the
// pair of classes whose merge loses the least average mutual information is
// merged. Frequency ties are broken lexicographically, merge-loss ties by the
// smallest (left, right) stable-id pair. Deterministic.
ClusterAssignment brown_cluster(const Corpus& corpus, int num_classes,
                                BrownTrace* trace = nullptr);

// Removes closed-class tokens; utterances left empty are dropped.
Corpus restrict_to_open_class(const Corpus& corpus, const FunctionWordLists& lists);

}  // namespace csflm

#endif  // CSFLM_BROWN_HPP
