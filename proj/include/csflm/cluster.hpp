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

#ifndef CSFLM_CLUSTER_HPP
#define CSFLM_CLUSTER_HPP

#include <cstdint>
#include <vector>

#include "csflm/clusters.hpp"
#include "csflm/rnnlm.hpp"

namespace csflm {

// Lloyd's algorithm with k-means++ seeding. Deterministic under a fixed
// seed; empty clusters are repaired by reseeding to the point farthest from
// its centroid. The sum-of-squared-distances objective after each iteration
// can be recorded through objective_trace.
ClusterAssignment kmeans(const EmbeddingMatrix& vectors, int k,
                         std::uint64_t seed, int max_iter = 100,
                         std::vector<double>* objective_trace = nullptr);

// Normalized-cut spectral clustering: mutual k-nearest-neighbour graph with
// Gaussian weights (bandwidth = median retained neighbour distance),
// symmetric normalized Laplacian, row-normalized embedding from the k
// smallest eigenvectors, then k-means in that space. Disconnected graphs are
// clustered per component with k allocated proportionally.
ClusterAssignment spectral_cluster(const EmbeddingMatrix& vectors, int k,
                                   int neighbors, std::uint64_t seed);

struct ValidityReport {
  double intra = 0.0;  // mean squared distance to the own-cluster mean
  double inter = 0.0;  // minimum squared distance between cluster means
  double ratio = 0.0;  // intra / inter; lower is better
};

// Requires >= 2 clusters and an assignment covering every vector.
ValidityReport cluster_validity(const EmbeddingMatrix& vectors,
                                const ClusterAssignment& assignment);

// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations;
// eigenvalues ascending with matching eigenvector columns. Exposed for the
// spectral pipeline and its tests; intended for desk-scale dense problems.
void symmetric_eigen(std::vector<std::vector<double>> matrix,
                     std::vector<double>& eigenvalues,
                     std::vector<std::vector<double>>& eigenvectors);

// Row-normalized spectral embedding of one connected similarity graph: the k
// eigenvectors of smallest Laplacian eigenvalue, rows scaled to unit norm.
std::vector<std::vector<double>> spectral_embedding(
    const std::vector<std::vector<double>>& weights, int k);

}  // namespace csflm

#endif  // CSFLM_CLUSTER_HPP
