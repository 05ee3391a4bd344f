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

#include "csflm/clusters.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "csflm/error.hpp"

namespace csflm {

void ClusterAssignment::assign(const std::string& word, int cluster) {
  if (cluster < 0) throw InvalidArgument("cluster IDs must be non-negative");
  word_to_cluster_[word] = cluster;
}

int ClusterAssignment::cluster_of(const std::string& word) const {
  auto it = word_to_cluster_.find(word);
  return it == word_to_cluster_.end() ? -1 : it->second;
}

bool ClusterAssignment::covers(const std::string& word) const {
  return word_to_cluster_.count(word) != 0;
}

int ClusterAssignment::num_clusters() const {
  std::set<int> ids;
  for (const auto& [_, c] : word_to_cluster_) ids.insert(c);
  return static_cast<int>(ids.size());
}

std::vector<std::vector<std::string>> ClusterAssignment::members() const {
  int max_id = -1;
  for (const auto& [_, c] : word_to_cluster_) max_id = std::max(max_id, c);
  std::vector<std::vector<std::string>> out(static_cast<std::size_t>(max_id + 1));
  for (const auto& [w, c] : word_to_cluster_) {
    out[static_cast<std::size_t>(c)].push_back(w);
  }
  return out;
}

void ClusterAssignment::check() const {
  for (const auto& members_of : members()) {
    // Empty IDs in the middle of the range mean an empty cluster.
    if (members_of.empty()) {
      throw InvalidArgument("cluster assignment contains an empty cluster");
    }
  }
}

ClusterAssignment read_cluster_map(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open cluster map '" + path + "'");
  ClusterAssignment out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw ParseError("cluster map: expected word<TAB>cluster_id", line_no);
    }
    std::string word = line.substr(0, tab);
    int cluster;
    try {
      cluster = std::stoi(line.substr(tab + 1));
    } catch (const std::exception&) {
      throw ParseError("cluster map: bad cluster id", line_no);
    }
    if (word.empty()) throw ParseError("cluster map: empty word", line_no);
    out.assign(word, cluster);
  }
  return out;
}

std::string cluster_map_tsv(const ClusterAssignment& assignment) {
  std::ostringstream out;
  for (const auto& [word, cluster] : assignment.word_to_cluster()) {
    out << word << '\t' << cluster << '\n';
  }
  return out.str();
}

void write_cluster_map(const ClusterAssignment& assignment,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write cluster map '" + path + "'");
  out << cluster_map_tsv(assignment);
}

}  // namespace csflm
