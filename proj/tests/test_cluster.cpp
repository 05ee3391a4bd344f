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

#include "csflm/cluster.hpp"
#include "csflm/error.hpp"
#include "csflm/rng.hpp"
#include "doctest.h"

using namespace csflm;

namespace {

std::string point_name(int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "p%04d", i);
  return buf;
}

EmbeddingMatrix matrix_of(const std::vector<std::vector<double>>& rows) {
  EmbeddingMatrix m;
  m.dim = rows.empty() ? 0 : static_cast<int>(rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    m.vectors[point_name(static_cast<int>(i))] = rows[i];
  }
  return m;
}

// Two Gaussian blobs separated by 10 sigma; labels[i] = blob index.
EmbeddingMatrix blobs(int per_blob, int dim, std::map<std::string, int>& labels,
                      std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> rows;
  for (int b = 0; b < 2; ++b) {
    for (int i = 0; i < per_blob; ++i) {
      std::vector<double> x(static_cast<std::size_t>(dim));
      for (int d = 0; d < dim; ++d) x[static_cast<std::size_t>(d)] = rng.next_gaussian();
      x[0] += b * 10.0;
      labels[point_name(static_cast<int>(rows.size()))] = b;
      rows.push_back(std::move(x));
    }
  }
  return matrix_of(rows);
}

// Two concentric rings; labels[i] = ring index.
EmbeddingMatrix rings(int per_ring, std::map<std::string, int>& labels,
                      std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> rows;
  const double radii[2] = {1.0, 5.0};
  for (int r = 0; r < 2; ++r) {
    for (int i = 0; i < per_ring; ++i) {
      double angle = 2.0 * 3.14159265358979323846 * i / per_ring;
      double noise = (rng.next_double() - 0.5) * 0.05;
      double radius = radii[r] + noise;
      labels[point_name(static_cast<int>(rows.size()))] = r;
      rows.push_back({radius * std::cos(angle), radius * std::sin(angle)});
    }
  }
  return matrix_of(rows);
}

// Adjusted Rand index between an assignment and ground-truth labels.
double adjusted_rand_index(const ClusterAssignment& assignment,
                           const std::map<std::string, int>& labels) {
  std::map<std::pair<int, int>, long long> table;
  std::map<int, long long> row_sum, col_sum;
  long long n = 0;
  for (const auto& [word, truth] : labels) {
    int cluster = assignment.cluster_of(word);
    REQUIRE(cluster >= 0);
    ++table[{cluster, truth}];
    ++row_sum[cluster];
    ++col_sum[truth];
    ++n;
  }
  auto comb2 = [](long long x) { return x * (x - 1) / 2; };
  double index = 0.0, rows = 0.0, cols = 0.0;
  for (const auto& [_, c] : table) index += static_cast<double>(comb2(c));
  for (const auto& [_, c] : row_sum) rows += static_cast<double>(comb2(c));
  for (const auto& [_, c] : col_sum) cols += static_cast<double>(comb2(c));
  double expected = rows * cols / static_cast<double>(comb2(n));
  double max_index = 0.5 * (rows + cols);
  return (index - expected) / (max_index - expected);
}

}  // namespace

TEST_CASE("kmeans degenerate cases") {
  EmbeddingMatrix m = matrix_of({{0, 0}, {1, 0}, {5, 5}, {6, 5}});
  SUBCASE("k equals n gives singletons with objective zero") {
    std::vector<double> trace;
    ClusterAssignment a = kmeans(m, 4, 1, 100, &trace);
    CHECK(a.num_clusters() == 4);
    CHECK(trace.back() == doctest::Approx(0.0));
  }
  SUBCASE("k = 1 centers on the mean") {
    std::vector<double> trace;
    ClusterAssignment a = kmeans(m, 1, 1, 100, &trace);
    CHECK(a.num_clusters() == 1);
    // objective = sum |x - mean|^2; mean = (3, 2.5)
    double expected = 0.0;
    std::vector<std::vector<double>> rows = {{0, 0}, {1, 0}, {5, 5}, {6, 5}};
    for (const auto& r : rows) {
      expected += (r[0] - 3.0) * (r[0] - 3.0) + (r[1] - 2.5) * (r[1] - 2.5);
    }
    CHECK(trace.back() == doctest::Approx(expected).epsilon(1e-12));
  }
  SUBCASE("k > n is an error") {
    CHECK_THROWS_AS(kmeans(m, 5, 1), InvalidArgument);
  }
}

TEST_CASE("kmeans objective is non-increasing and the run is deterministic") {
  std::map<std::string, int> labels;
  EmbeddingMatrix m = blobs(40, 3, labels, 99);
  std::vector<double> trace;
  ClusterAssignment a = kmeans(m, 5, 7, 100, &trace);
  REQUIRE(trace.size() >= 2);
  for (std::size_t i = 1; i < trace.size(); ++i) {
    CHECK(trace[i] <= trace[i - 1] + 1e-9);
  }
  ClusterAssignment b = kmeans(m, 5, 7);
  CHECK(a.word_to_cluster() == b.word_to_cluster());
  ClusterAssignment c = kmeans(m, 5, 8);
  CHECK(a.num_clusters() == c.num_clusters());
}

TEST_CASE("well-separated blobs are recovered exactly") {
  std::map<std::string, int> labels;
  EmbeddingMatrix m = blobs(60, 4, labels, 1234);
  CHECK(adjusted_rand_index(kmeans(m, 2, 5), labels) == doctest::Approx(1.0));
  CHECK(adjusted_rand_index(spectral_cluster(m, 2, 10, 5), labels) ==
        doctest::Approx(1.0));
  // With enough neighbours the blob graph is connected, exercising the
  // eigenvector path rather than the component path.
  CHECK(adjusted_rand_index(spectral_cluster(m, 2, 70, 5), labels) ==
        doctest::Approx(1.0));
}

TEST_CASE("concentric rings separate spectrally but not linearly") {
  std::map<std::string, int> labels;
  EmbeddingMatrix m = rings(150, labels, 4321);
  double kmeans_ari = adjusted_rand_index(kmeans(m, 2, 11), labels);
  double spectral_ari = adjusted_rand_index(spectral_cluster(m, 2, 10, 11), labels);
  CHECK(spectral_ari == doctest::Approx(1.0));
  CHECK(kmeans_ari < 0.5);
}

TEST_CASE("spectral clustering handles k = n and determinism") {
  EmbeddingMatrix m = matrix_of({{0, 0}, {3, 0}, {0, 3}, {3, 3}});
  ClusterAssignment a = spectral_cluster(m, 4, 2, 3);
  CHECK(a.num_clusters() == 4);
  std::map<std::string, int> labels;
  EmbeddingMatrix r = rings(60, labels, 5);
  ClusterAssignment s1 = spectral_cluster(r, 3, 8, 17);
  ClusterAssignment s2 = spectral_cluster(r, 3, 8, 17);
  CHECK(s1.word_to_cluster() == s2.word_to_cluster());
  CHECK_THROWS_AS(spectral_cluster(m, 5, 2, 1), InvalidArgument);
  CHECK_THROWS_AS(spectral_cluster(m, 2, 0, 1), InvalidArgument);
}

TEST_CASE("spectral embedding rows are unit length") {
  // Directly check the eigensolver and row normalization on a small graph.
  std::vector<std::vector<double>> sym = {
      {2.0, -1.0, 0.0, 0.0},
      {-1.0, 2.0, -1.0, 0.0},
      {0.0, -1.0, 2.0, -1.0},
      {0.0, 0.0, -1.0, 2.0},
  };
  std::vector<double> values;
  std::vector<std::vector<double>> vectors;
  symmetric_eigen(sym, values, vectors);
  REQUIRE(values.size() == 4);
  for (std::size_t i = 1; i < values.size(); ++i) CHECK(values[i] >= values[i - 1]);
  // Residual |Av - lambda v| must vanish for every eigenpair.
  for (std::size_t c = 0; c < 4; ++c) {
    for (std::size_t r = 0; r < 4; ++r) {
      double av = 0.0;
      for (std::size_t k = 0; k < 4; ++k) av += sym[r][k] * vectors[k][c];
      CHECK(av == doctest::Approx(values[c] * vectors[r][c]).epsilon(1e-8).scale(1.0));
    }
  }
}

TEST_CASE("cluster_validity basics") {
  SUBCASE("singletons have zero intra variance and ratio") {
    EmbeddingMatrix m = matrix_of({{0, 0}, {4, 0}, {0, 4}});
    ClusterAssignment a("manual");
    a.assign(point_name(0), 0);
    a.assign(point_name(1), 1);
    a.assign(point_name(2), 2);
    ValidityReport r = cluster_validity(m, a);
    CHECK(r.intra == 0.0);
    CHECK(r.ratio == 0.0);
    CHECK(r.inter == doctest::Approx(16.0));
  }
  SUBCASE("two singletons at distance d have inter d^2") {
    EmbeddingMatrix m = matrix_of({{0, 0}, {3, 4}});
    ClusterAssignment a("manual");
    a.assign(point_name(0), 0);
    a.assign(point_name(1), 1);
    ValidityReport r = cluster_validity(m, a);
    CHECK(r.intra == 0.0);
    CHECK(r.inter == doctest::Approx(25.0));
  }
  SUBCASE("a single cluster is an error") {
    EmbeddingMatrix m = matrix_of({{0, 0}, {1, 1}});
    ClusterAssignment a("manual");
    a.assign(point_name(0), 0);
    a.assign(point_name(1), 0);
    CHECK_THROWS_AS(cluster_validity(m, a), InvalidArgument);
  }
  SUBCASE("unassigned vectors are an error") {
    EmbeddingMatrix m = matrix_of({{0, 0}, {1, 1}});
    ClusterAssignment a("manual");
    a.assign(point_name(0), 0);
    CHECK_THROWS_AS(cluster_validity(m, a), InvalidArgument);
  }
}

TEST_CASE("cluster_validity equals a brute-force recomputation") {
  Rng rng(31337);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 20; ++i) {
    rows.push_back({rng.next_gaussian(), rng.next_gaussian(), rng.next_gaussian()});
  }
  EmbeddingMatrix m = matrix_of(rows);
  ClusterAssignment a = kmeans(m, 3, 55);
  ValidityReport r = cluster_validity(m, a);

  // Independent double-loop recomputation.
  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    members[a.cluster_of(point_name(static_cast<int>(i)))].push_back(i);
  }
  std::map<int, std::vector<double>> mu;
  for (const auto& [c, idx] : members) {
    std::vector<double> mean(3, 0.0);
    for (std::size_t i : idx) {
      for (int d = 0; d < 3; ++d) mean[static_cast<std::size_t>(d)] += rows[i][static_cast<std::size_t>(d)];
    }
    for (auto& v : mean) v /= static_cast<double>(idx.size());
    mu[c] = mean;
  }
  double intra = 0.0;
  for (const auto& [c, idx] : members) {
    for (std::size_t i : idx) {
      for (int d = 0; d < 3; ++d) {
        double diff = rows[i][static_cast<std::size_t>(d)] - mu[c][static_cast<std::size_t>(d)];
        intra += diff * diff;
      }
    }
  }
  intra /= 20.0;
  double inter = 1e300;
  for (auto it = mu.begin(); it != mu.end(); ++it) {
    for (auto jt = std::next(it); jt != mu.end(); ++jt) {
      double d = 0.0;
      for (int k = 0; k < 3; ++k) {
        double diff = it->second[static_cast<std::size_t>(k)] - jt->second[static_cast<std::size_t>(k)];
        d += diff * diff;
      }
      inter = std::min(inter, d);
    }
  }
  CHECK(r.intra == doctest::Approx(intra).epsilon(1e-12));
  CHECK(r.inter == doctest::Approx(inter).epsilon(1e-12));
  CHECK(r.ratio == doctest::Approx(intra / inter).epsilon(1e-12));
}

TEST_CASE("validity is translation invariant and scales quadratically") {
  // Dyadic coordinates make the arithmetic exact.
  std::vector<std::vector<double>> rows = {{0.25, 0.5}, {0.75, 0.5}, {4.25, 2.0}, {4.75, 2.0}};
  EmbeddingMatrix m = matrix_of(rows);
  ClusterAssignment a("manual");
  a.assign(point_name(0), 0);
  a.assign(point_name(1), 0);
  a.assign(point_name(2), 1);
  a.assign(point_name(3), 1);
  ValidityReport base = cluster_validity(m, a);

  std::vector<std::vector<double>> shifted = rows;
  for (auto& r : shifted) {
    r[0] += 2.0;
    r[1] -= 4.0;
  }
  ValidityReport t = cluster_validity(matrix_of(shifted), a);
  CHECK(t.intra == base.intra);
  CHECK(t.inter == base.inter);
  CHECK(t.ratio == base.ratio);

  std::vector<std::vector<double>> scaled = rows;
  for (auto& r : scaled) {
    r[0] *= 2.0;
    r[1] *= 2.0;
  }
  ValidityReport s = cluster_validity(matrix_of(scaled), a);
  CHECK(s.intra == 4.0 * base.intra);
  CHECK(s.inter == 4.0 * base.inter);
  CHECK(s.ratio == base.ratio);
}

TEST_CASE("spectral embedding rows have unit norm") {
  // A connected ring graph with uneven weights.
  Rng rng(909);
  const std::size_t n = 24;
  std::vector<std::vector<double>> weights(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t j = (i + 1) % n;
    double w = 0.2 + rng.next_double();
    weights[i][j] = w;
    weights[j][i] = w;
  }
  for (int k : {2, 3, 5}) {
    auto embedding = spectral_embedding(weights, k);
    REQUIRE(embedding.size() == n);
    for (const auto& row : embedding) {
      double norm = 0.0;
      for (double v : row) norm += v * v;
      CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}
