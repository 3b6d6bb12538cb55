#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "pathnet/numerics.hpp"
#include "pathnet/solvers.hpp"

namespace pathnet {

struct ClusteringResult {
  std::vector<int> assignments;       // cluster ids in [0, K)
  std::optional<double> accuracy;     // filled when checked against truth
  Mat distance_matrix;                // T x T pairwise Euclidean distances
};

// Task-vector estimates from a vanilla solution: row t is B^T h_t.
// Any other method throws.
Mat estimate_task_vectors(const MtlSolution& solution);

// K-means over the task-vector rows (the Euclidean task-similarity
// structure); restarts follow the numerics defaults.
ClusteringResult cluster_tasks(const Mat& theta_hat, int k, std::uint64_t seed);

// Fraction matched under the best label bijection, via exact assignment
// on the contingency matrix. Invariant to relabeling either side.
double clustering_accuracy(const std::vector<int>& predicted,
                           const std::vector<int>& truth);

}  // namespace pathnet
