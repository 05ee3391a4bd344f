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

#ifndef CSFLM_CLUSTERS_HPP
#define CSFLM_CLUSTERS_HPP

#include <map>
#include <string>
#include <vector>

namespace csflm {

// A word partition shared by Brown clustering and the embedding clusterings:
// every assigned word is in exactly one cluster and no cluster is empty.
class ClusterAssignment {
 public:
  ClusterAssignment() = default;
  explicit ClusterAssignment(std::string source) : source_(std::move(source)) {}

  void assign(const std::string& word, int cluster);

  // -1 when the word is not covered.
  int cluster_of(const std::string& word) const;
  bool covers(const std::string& word) const;

  int num_clusters() const;
  std::size_t num_words() const { return word_to_cluster_.size(); }
  const std::map<std::string, int>& word_to_cluster() const {
    return word_to_cluster_;
  }
  std::vector<std::vector<std::string>> members() const;

  const std::string& source() const { return source_; }
  void set_source(std::string s) { source_ = std::move(s); }

  // Validates the partition invariants; throws InvalidArgument on violation.
  void check() const;

 private:
  std::map<std::string, int> word_to_cluster_;
  std::string source_;
};

// TSV `word<TAB>cluster_id`, one word per line, sorted by word.
ClusterAssignment read_cluster_map(const std::string& path);
void write_cluster_map(const ClusterAssignment& assignment, const std::string& path);
std::string cluster_map_tsv(const ClusterAssignment& assignment);

}  // namespace csflm

#endif  // CSFLM_CLUSTERS_HPP
