#include "pathnet/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace pathnet {

Mat estimate_task_vectors(const MtlSolution& solution) {
  if (solution.method != Method::kVanilla) {
    throw std::invalid_argument(
        "estimate_task_vectors: expected a vanilla solution, got " +
        to_string(solution.method));
  }
  const int t_count = static_cast<int>(solution.heads.size());
  const Mat rep = compose(solution.net, solution.pathways.front());
  Mat theta(t_count, rep.cols());
  for (int t = 0; t < t_count; ++t) {
    theta.row(t) =
        (rep.transpose() * solution.heads[static_cast<std::size_t>(t)]).transpose();
  }
  return theta;
}

ClusteringResult cluster_tasks(const Mat& theta_hat, int k, std::uint64_t seed) {
  const Eigen::Index t = theta_hat.rows();
  ClusteringResult result;
  result.assignments = kmeans(theta_hat, k, seed).assignments;
  result.distance_matrix = Mat::Zero(t, t);
  for (Eigen::Index i = 0; i < t; ++i) {
    for (Eigen::Index j = i + 1; j < t; ++j) {
      const double d = (theta_hat.row(i) - theta_hat.row(j)).norm();
      result.distance_matrix(i, j) = d;
      result.distance_matrix(j, i) = d;
    }
  }
  return result;
}

namespace {

// Hungarian algorithm (Kuhn-Munkres with potentials) maximizing the
// contingency-matrix trace; O(n^3).
std::int64_t max_assignment(const std::vector<std::vector<std::int64_t>>& gain) {
  const int n = static_cast<int>(gain.size());
  // Minimize cost = -gain with the classic potentials formulation.
  const std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;
  std::vector<std::int64_t> potential_u(n + 1, 0), potential_v(n + 1, 0);
  std::vector<int> match(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int free_col = 0;
    std::vector<std::int64_t> min_slack(n + 1, kInf);
    std::vector<bool> used(n + 1, false);
    do {
      used[static_cast<std::size_t>(free_col)] = true;
      const int row = match[static_cast<std::size_t>(free_col)];
      std::int64_t delta = kInf;
      int next_col = -1;
      for (int col = 1; col <= n; ++col) {
        if (used[static_cast<std::size_t>(col)]) continue;
        const std::int64_t cost =
            -gain[static_cast<std::size_t>(row - 1)][static_cast<std::size_t>(col - 1)] -
            potential_u[static_cast<std::size_t>(row)] -
            potential_v[static_cast<std::size_t>(col)];
        if (cost < min_slack[static_cast<std::size_t>(col)]) {
          min_slack[static_cast<std::size_t>(col)] = cost;
          way[static_cast<std::size_t>(col)] = free_col;
        }
        if (min_slack[static_cast<std::size_t>(col)] < delta) {
          delta = min_slack[static_cast<std::size_t>(col)];
          next_col = col;
        }
      }
      for (int col = 0; col <= n; ++col) {
        if (used[static_cast<std::size_t>(col)]) {
          potential_u[static_cast<std::size_t>(match[static_cast<std::size_t>(col)])] += delta;
          potential_v[static_cast<std::size_t>(col)] -= delta;
        } else {
          min_slack[static_cast<std::size_t>(col)] -= delta;
        }
      }
      free_col = next_col;
    } while (match[static_cast<std::size_t>(free_col)] != 0);
    do {
      const int previous = way[static_cast<std::size_t>(free_col)];
      match[static_cast<std::size_t>(free_col)] = match[static_cast<std::size_t>(previous)];
      free_col = previous;
    } while (free_col != 0);
  }
  std::int64_t total = 0;
  for (int col = 1; col <= n; ++col) {
    const int row = match[static_cast<std::size_t>(col)];
    if (row >= 1) {
      total += gain[static_cast<std::size_t>(row - 1)][static_cast<std::size_t>(col - 1)];
    }
  }
  return total;
}

}  // namespace

double clustering_accuracy(const std::vector<int>& predicted,
                           const std::vector<int>& truth) {
  if (predicted.size() != truth.size()) {
    throw std::invalid_argument("clustering_accuracy: length mismatch");
  }
  if (predicted.empty()) {
    throw std::invalid_argument("clustering_accuracy: empty assignments");
  }
  // Compact both label sets, then pad the contingency matrix to square.
  std::map<int, int> pred_ids, true_ids;
  for (int label : predicted) pred_ids.emplace(label, static_cast<int>(pred_ids.size()));
  for (int label : truth) true_ids.emplace(label, static_cast<int>(true_ids.size()));
  const int n = std::max(static_cast<int>(pred_ids.size()),
                         static_cast<int>(true_ids.size()));
  std::vector<std::vector<std::int64_t>> contingency(
      static_cast<std::size_t>(n), std::vector<std::int64_t>(static_cast<std::size_t>(n), 0));
  for (std::size_t t = 0; t < predicted.size(); ++t) {
    const int i = pred_ids[predicted[t]];
    const int j = true_ids[truth[t]];
    ++contingency[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  const std::int64_t matched = max_assignment(contingency);
  return static_cast<double>(matched) / static_cast<double>(predicted.size());
}

}  // namespace pathnet
