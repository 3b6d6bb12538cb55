#include "pathnet/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace pathnet {

namespace {

double quantile(std::vector<double> sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double position = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(position);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = position - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

Vec sample_unit(int dim, Rng& rng) {
  Vec v(dim);
  double norm2 = 0.0;
  do {
    for (int i = 0; i < dim; ++i) v(i) = rng.normal();
    norm2 = v.squaredNorm();
  } while (norm2 == 0.0);
  return v / std::sqrt(norm2);
}

}  // namespace

TransferResult tlop_fit(const Supernet& net, const TaskDataset& target,
                        const Vec* theta_star) {
  if (target.x.rows() < 1) {
    throw std::invalid_argument("tlop_fit: empty target dataset");
  }
  const auto pathways = enumerate_pathways(net.config);
  TransferResult best;
  best.empirical_risk = std::numeric_limits<double>::infinity();
  best.pathway_risks.reserve(pathways.size());
  for (const Pathway& path : pathways) {
    const Mat rep = compose(net, path);
    const Mat features = target.x * rep.transpose();
    const Vec head = pinv_least_squares(features, target.y);
    const double risk = (target.y - features * head).squaredNorm() /
                        static_cast<double>(target.x.rows());
    best.pathway_risks.push_back(risk);
    // Enumeration is lexicographic, so strict < keeps the smallest tie.
    if (risk < best.empirical_risk) {
      best.empirical_risk = risk;
      best.pathway = path;
      best.head = head;
    }
  }
  if (theta_star != nullptr) {
    const Mat rep = compose(net, best.pathway);
    best.excess_risk = (rep.transpose() * best.head - *theta_star).squaredNorm();
    best.bias_estimate = supernet_bias(net, *theta_star);
  }
  return best;
}

double supernet_bias(const Supernet& net, const Vec& theta_target,
                     double optimal_risk) {
  double best = std::numeric_limits<double>::infinity();
  for (const Pathway& path : enumerate_pathways(net.config)) {
    const Mat rep = compose(net, path);
    // Projection through a possibly rank-deficient representation.
    const Vec coefficients =
        pinv_least_squares(rep.transpose(), theta_target);
    const double residual =
        (theta_target - rep.transpose() * coefficients).squaredNorm();
    best = std::min(best, residual);
  }
  return best - optimal_risk;
}

std::vector<TransferSweepRow> transfer_sweep(const Supernet& net,
                                             const GroundTruth& truth,
                                             const std::vector<int>& m_grid,
                                             int targets_per_point,
                                             std::uint64_t seed,
                                             double sigma) {
  if (targets_per_point < 1) {
    throw std::invalid_argument("transfer_sweep: targets_per_point < 1");
  }
  const int p = truth.net.config.input_dim();
  std::vector<TransferSweepRow> rows;
  Rng root(seed);
  for (std::size_t gi = 0; gi < m_grid.size(); ++gi) {
    const int m = m_grid[gi];
    if (m < 1) throw std::invalid_argument("transfer_sweep: M must be >= 1");
    std::vector<double> excess;
    excess.reserve(static_cast<std::size_t>(targets_per_point));
    for (int j = 0; j < targets_per_point; ++j) {
      Rng rng = root.substream(gi).substream(static_cast<std::uint64_t>(j));
      // Target pathway uniform over source pathways, fresh unit head.
      const std::size_t pick =
          static_cast<std::size_t>(rng.below(truth.pathways.size()));
      const Pathway& target_path = truth.pathways[pick];
      const Vec head = sample_unit(truth.net.config.head_dim(), rng);
      const Vec theta = compose(truth.net, target_path).transpose() * head;

      TaskDataset target;
      target.noise_sigma = sigma;
      target.x.resize(m, p);
      target.y.resize(m);
      for (int i = 0; i < m; ++i) {
        for (int c = 0; c < p; ++c) target.x(i, c) = rng.normal();
        target.y(i) = target.x.row(i).dot(theta) + sigma * rng.normal();
      }
      const TransferResult fit = tlop_fit(net, target, &theta);
      excess.push_back(*fit.excess_risk);
    }
    std::sort(excess.begin(), excess.end());
    TransferSweepRow row;
    row.samples = m;
    row.mean_excess =
        std::accumulate(excess.begin(), excess.end(), 0.0) /
        static_cast<double>(excess.size());
    row.q1 = quantile(excess, 0.25);
    row.median = quantile(excess, 0.5);
    row.q3 = quantile(excess, 0.75);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace pathnet
