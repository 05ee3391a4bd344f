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

#include "csflm/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "csflm/error.hpp"
#include "csflm/rng.hpp"

namespace csflm {

namespace {

using Matrix = std::vector<std::vector<double>>;

struct Points {
  std::vector<std::string> names;
  Matrix rows;
};

Points points_of(const EmbeddingMatrix& vectors) {
  vectors.check();
  Points p;
  for (const auto& [word, vec] : vectors.vectors) {
    p.names.push_back(word);
    p.rows.push_back(vec);
  }
  return p;
}

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double diff = a[i] - b[i];
    d += diff * diff;
  }
  return d;
}

// Core Lloyd iteration over raw rows; returns cluster index per row.
std::vector<int> kmeans_rows(const Matrix& rows, int k, Rng& rng, int max_iter,
                             std::vector<double>* objective_trace) {
  const std::size_t n = rows.size();
  if (k < 1) throw InvalidArgument("kmeans: k must be >= 1");
  if (static_cast<std::size_t>(k) > n) {
    throw InvalidArgument("kmeans: k exceeds the number of vectors");
  }
  const std::size_t dim = rows[0].size();

  // k-means++ seeding.
  Matrix centroids;
  centroids.push_back(rows[rng.next_index(n)]);
  std::vector<double> nearest(n, 0.0);
  while (centroids.size() < static_cast<std::size_t>(k)) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::max();
      for (const auto& c : centroids) best = std::min(best, sq_dist(rows[i], c));
      nearest[i] = best;
      total += best;
    }
    std::size_t pick;
    if (total <= 0.0) {
      pick = rng.next_index(n);  // all points coincide with some centroid
    } else {
      pick = rng.next_weighted(nearest);
    }
    centroids.push_back(rows[pick]);
  }

  std::vector<int> assign(n, -1);
  for (int iter = 0; iter < max_iter; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_d = sq_dist(rows[i], centroids[0]);
      for (int c = 1; c < k; ++c) {
        double d = sq_dist(rows[i], centroids[static_cast<std::size_t>(c)]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }
    // Empty clusters steal the point farthest from its assigned centroid.
    std::vector<std::int64_t> sizes(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < n; ++i) ++sizes[static_cast<std::size_t>(assign[i])];
    for (int c = 0; c < k; ++c) {
      if (sizes[static_cast<std::size_t>(c)] > 0) continue;
      std::size_t farthest = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (sizes[static_cast<std::size_t>(assign[i])] <= 1) continue;
        double d = sq_dist(rows[i], centroids[static_cast<std::size_t>(assign[i])]);
        if (d > far_d) {
          far_d = d;
          farthest = i;
        }
      }
      --sizes[static_cast<std::size_t>(assign[farthest])];
      assign[farthest] = c;
      ++sizes[static_cast<std::size_t>(c)];
      changed = true;
    }
    // Update step.
    for (auto& c : centroids) std::fill(c.begin(), c.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      auto& c = centroids[static_cast<std::size_t>(assign[i])];
      for (std::size_t d = 0; d < dim; ++d) c[d] += rows[i][d];
    }
    for (int c = 0; c < k; ++c) {
      for (std::size_t d = 0; d < dim; ++d) {
        centroids[static_cast<std::size_t>(c)][d] /=
            static_cast<double>(sizes[static_cast<std::size_t>(c)]);
      }
    }
    if (objective_trace) {
      double obj = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        obj += sq_dist(rows[i], centroids[static_cast<std::size_t>(assign[i])]);
      }
      objective_trace->push_back(obj);
    }
    if (!changed) break;
  }
  return assign;
}

}  // namespace

ClusterAssignment kmeans(const EmbeddingMatrix& vectors, int k,
                         std::uint64_t seed, int max_iter,
                         std::vector<double>* objective_trace) {
  Points p = points_of(vectors);
  if (p.rows.empty()) throw InvalidArgument("kmeans: no vectors");
  Rng rng(seed);
  std::vector<int> assign = kmeans_rows(p.rows, k, rng, max_iter, objective_trace);
  ClusterAssignment out("kmeans");
  for (std::size_t i = 0; i < p.names.size(); ++i) {
    out.assign(p.names[i], assign[i]);
  }
  return out;
}

void symmetric_eigen(std::vector<std::vector<double>> a,
                     std::vector<double>& eigenvalues,
                     std::vector<std::vector<double>>& eigenvectors) {
  const std::size_t n = a.size();
  Matrix v(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0;

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) off += a[i][j] * a[i][j];
    }
    if (off < 1e-22) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (std::size_t i = 0; i < n; ++i) {
          double aip = a[i][p], aiq = a[i][q];
          a[i][p] = c * aip - s * aiq;
          a[i][q] = s * aip + c * aiq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          double api = a[p][i], aqi = a[q][i];
          a[p][i] = c * api - s * aqi;
          a[q][i] = s * api + c * aqi;
        }
        for (std::size_t i = 0; i < n; ++i) {
          double vip = v[i][p], viq = v[i][q];
          v[i][p] = c * vip - s * viq;
          v[i][q] = s * vip + c * viq;
        }
      }
    }
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&a](std::size_t x, std::size_t y) { return a[x][x] < a[y][y]; });
  eigenvalues.assign(n, 0.0);
  eigenvectors.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t col = 0; col < n; ++col) {
    eigenvalues[col] = a[order[col]][order[col]];
    for (std::size_t row = 0; row < n; ++row) {
      eigenvectors[row][col] = v[row][order[col]];
    }
  }
}

std::vector<std::vector<double>> spectral_embedding(
    const std::vector<std::vector<double>>& weights, int k) {
  const std::size_t n = weights.size();
  std::vector<double> degree(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) degree[i] += weights[i][j];
  }
  // L = I - D^(-1/2) W D^(-1/2); the graph has no self loops.
  Matrix laplacian(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    laplacian[i][i] = 1.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (weights[i][j] > 0.0 && degree[i] > 0.0 && degree[j] > 0.0) {
        laplacian[i][j] -= weights[i][j] / std::sqrt(degree[i] * degree[j]);
      }
    }
  }
  std::vector<double> eigenvalues;
  Matrix eigenvectors;
  symmetric_eigen(laplacian, eigenvalues, eigenvectors);
  Matrix embedding(n, std::vector<double>(static_cast<std::size_t>(k), 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    double norm = 0.0;
    for (int c = 0; c < k; ++c) {
      embedding[i][static_cast<std::size_t>(c)] =
          eigenvectors[i][static_cast<std::size_t>(c)];
      norm += embedding[i][static_cast<std::size_t>(c)] *
              embedding[i][static_cast<std::size_t>(c)];
    }
    norm = std::sqrt(norm);
    if (norm > 1e-12) {
      for (int c = 0; c < k; ++c) embedding[i][static_cast<std::size_t>(c)] /= norm;
    }
  }
  return embedding;
}

namespace {

// Spectral embedding of one connected component followed by k-means.
std::vector<int> spectral_component(const Matrix& weights, int k, Rng& rng) {
  return kmeans_rows(spectral_embedding(weights, k), k, rng, 100, nullptr);
}

}  // namespace

ClusterAssignment spectral_cluster(const EmbeddingMatrix& vectors, int k,
                                   int neighbors, std::uint64_t seed) {
  Points p = points_of(vectors);
  const std::size_t n = p.rows.size();
  if (n == 0) throw InvalidArgument("spectral_cluster: no vectors");
  if (k < 1 || static_cast<std::size_t>(k) > n) {
    throw InvalidArgument("spectral_cluster: k must be in [1, n]");
  }
  if (neighbors < 1) throw InvalidArgument("spectral_cluster: neighbors must be >= 1");

  // Mutual k-nearest-neighbour sets.
  std::vector<std::vector<std::size_t>> knn(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::pair<double, std::size_t>> dists;
    dists.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) dists.emplace_back(sq_dist(p.rows[i], p.rows[j]), j);
    }
    std::size_t take = std::min(static_cast<std::size_t>(neighbors), dists.size());
    std::partial_sort(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(take),
                      dists.end());
    for (std::size_t t = 0; t < take; ++t) knn[i].push_back(dists[t].second);
  }
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::vector<double> edge_dists;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j : knn[i]) {
      if (j < i) continue;  // handle each unordered pair once
      bool mutual = std::find(knn[j].begin(), knn[j].end(), i) != knn[j].end();
      if (mutual) {
        edges.emplace_back(i, j);
        edge_dists.push_back(std::sqrt(sq_dist(p.rows[i], p.rows[j])));
      }
    }
  }
  double bandwidth = 1.0;
  if (!edge_dists.empty()) {
    std::vector<double> sorted = edge_dists;
    std::sort(sorted.begin(), sorted.end());
    bandwidth = sorted[sorted.size() / 2];
  }
  if (bandwidth <= 0.0) bandwidth = 1.0;

  // Connected components of the mutual graph.
  std::vector<int> component(n, -1);
  std::vector<std::vector<std::size_t>> adjacency(n);
  for (const auto& [i, j] : edges) {
    adjacency[i].push_back(j);
    adjacency[j].push_back(i);
  }
  int num_components = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (component[i] >= 0) continue;
    std::vector<std::size_t> stack = {i};
    component[i] = num_components;
    while (!stack.empty()) {
      std::size_t cur = stack.back();
      stack.pop_back();
      for (std::size_t next : adjacency[cur]) {
        if (component[next] < 0) {
          component[next] = num_components;
          stack.push_back(next);
        }
      }
    }
    ++num_components;
  }
  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(num_components));
  for (std::size_t i = 0; i < n; ++i) {
    members[static_cast<std::size_t>(component[i])].push_back(i);
  }
  // More components than clusters: merge the smallest component into its
  // nearest neighbour component until the counts line up.
  while (static_cast<int>(members.size()) > k) {
    std::size_t smallest = 0;
    for (std::size_t c = 1; c < members.size(); ++c) {
      if (members[c].size() < members[smallest].size()) smallest = c;
    }
    std::size_t target = smallest == 0 ? 1 : 0;
    double best = std::numeric_limits<double>::max();
    for (std::size_t c = 0; c < members.size(); ++c) {
      if (c == smallest) continue;
      for (std::size_t a : members[smallest]) {
        for (std::size_t b : members[c]) {
          double d = sq_dist(p.rows[a], p.rows[b]);
          if (d < best) {
            best = d;
            target = c;
          }
        }
      }
    }
    members[target].insert(members[target].end(), members[smallest].begin(),
                           members[smallest].end());
    std::sort(members[target].begin(), members[target].end());
    members.erase(members.begin() + static_cast<std::ptrdiff_t>(smallest));
  }
  // Proportional allocation of k over components (each gets at least 1).
  std::vector<int> alloc(members.size(), 1);
  int remaining = k - static_cast<int>(members.size());
  std::vector<double> fractional(members.size(), 0.0);
  for (std::size_t c = 0; c < members.size(); ++c) {
    double share = static_cast<double>(members[c].size()) / static_cast<double>(n) *
                   static_cast<double>(k);
    int extra = std::max(0, static_cast<int>(std::floor(share)) - 1);
    extra = std::min(extra, static_cast<int>(members[c].size()) - 1);
    extra = std::min(extra, remaining);
    alloc[c] += extra;
    remaining -= extra;
    fractional[c] = share - std::floor(share);
  }
  while (remaining > 0) {
    // Largest remainder first among components with spare capacity.
    int best = -1;
    for (std::size_t c = 0; c < members.size(); ++c) {
      if (alloc[c] >= static_cast<int>(members[c].size())) continue;
      if (best < 0 || fractional[c] > fractional[static_cast<std::size_t>(best)]) {
        best = static_cast<int>(c);
      }
    }
    if (best < 0) throw Error("spectral_cluster: allocation overflow");
    ++alloc[static_cast<std::size_t>(best)];
    fractional[static_cast<std::size_t>(best)] -= 1.0;
    --remaining;
  }

  Rng rng(seed);
  ClusterAssignment out("spectral");
  int next_cluster = 0;
  for (std::size_t c = 0; c < members.size(); ++c) {
    const auto& idx = members[c];
    std::vector<int> local;
    if (alloc[c] == 1) {
      local.assign(idx.size(), 0);
    } else {
      Matrix weights(idx.size(), std::vector<double>(idx.size(), 0.0));
      for (const auto& [i, j] : edges) {
        if (component[i] != component[j]) continue;
        auto ii = std::lower_bound(idx.begin(), idx.end(), i);
        auto jj = std::lower_bound(idx.begin(), idx.end(), j);
        if (ii == idx.end() || *ii != i || jj == idx.end() || *jj != j) continue;
        double w = std::exp(-sq_dist(p.rows[i], p.rows[j]) /
                            (2.0 * bandwidth * bandwidth));
        std::size_t a = static_cast<std::size_t>(ii - idx.begin());
        std::size_t b = static_cast<std::size_t>(jj - idx.begin());
        weights[a][b] = w;
        weights[b][a] = w;
      }
      local = spectral_component(weights, alloc[c], rng);
    }
    for (std::size_t t = 0; t < idx.size(); ++t) {
      out.assign(p.names[idx[t]], next_cluster + local[t]);
    }
    next_cluster += alloc[c];
  }
  return out;
}

ValidityReport cluster_validity(const EmbeddingMatrix& vectors,
                                const ClusterAssignment& assignment) {
  Points p = points_of(vectors);
  if (p.rows.empty()) throw InvalidArgument("cluster_validity: no vectors");
  const std::size_t dim = p.rows[0].size();
  std::map<int, std::pair<std::vector<double>, std::int64_t>> sums;
  for (std::size_t i = 0; i < p.rows.size(); ++i) {
    int c = assignment.cluster_of(p.names[i]);
    if (c < 0) {
      throw InvalidArgument("cluster_validity: vector '" + p.names[i] +
                            "' is not assigned");
    }
    auto& [sum, count] = sums[c];
    if (sum.empty()) sum.assign(dim, 0.0);
    for (std::size_t d = 0; d < dim; ++d) sum[d] += p.rows[i][d];
    ++count;
  }
  if (sums.size() < 2) {
    throw InvalidArgument("cluster_validity: inter-cluster variance needs >= 2 clusters");
  }
  std::map<int, std::vector<double>> means;
  for (const auto& [c, sc] : sums) {
    std::vector<double> mean(dim);
    for (std::size_t d = 0; d < dim; ++d) {
      mean[d] = sc.first[d] / static_cast<double>(sc.second);
    }
    means[c] = std::move(mean);
  }
  ValidityReport report;
  for (std::size_t i = 0; i < p.rows.size(); ++i) {
    report.intra += sq_dist(p.rows[i], means.at(assignment.cluster_of(p.names[i])));
  }
  report.intra /= static_cast<double>(p.rows.size());
  report.inter = std::numeric_limits<double>::max();
  for (auto it = means.begin(); it != means.end(); ++it) {
    for (auto jt = std::next(it); jt != means.end(); ++jt) {
      report.inter = std::min(report.inter, sq_dist(it->second, jt->second));
    }
  }
  report.ratio = report.inter > 0.0 ? report.intra / report.inter : 0.0;
  return report;
}

}  // namespace csflm
