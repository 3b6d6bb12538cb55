#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "pathnet/datagen.hpp"
#include "pathnet/numerics.hpp"
#include "pathnet/supernet.hpp"

namespace pathnet {

struct TransferResult {
  Pathway pathway;
  Vec head;
  double empirical_risk = 0.0;
  std::optional<double> excess_risk;     // ||B^T h - theta*||^2 when theta* known
  std::optional<double> bias_estimate;
  // Exhaustive per-pathway empirical risks, in enumeration order.
  std::vector<double> pathway_risks;
};

// Pathway search plus min-norm head fit on a frozen supernet. Ties break
// toward the lexicographically smallest pathway. When theta_star is
// given, the composed-predictor excess risk and the supernet bias are
// filled in.
TransferResult tlop_fit(const Supernet& net, const TaskDataset& target,
                        const Vec* theta_star = nullptr);

// min over pathways of ||(I - B_a^T (B_a B_a^T)^+ B_a) theta||^2 minus
// the optimum's contribution (zero in the noiseless realizable case).
double supernet_bias(const Supernet& net, const Vec& theta_target,
                     double optimal_risk = 0.0);

struct TransferSweepRow {
  int samples = 0;          // M
  double mean_excess = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
};

// Targets drawn with a uniformly random source pathway and a fresh unit
// head; reports mean and quartiles of excess risk per M.
std::vector<TransferSweepRow> transfer_sweep(const Supernet& net,
                                             const GroundTruth& truth,
                                             const std::vector<int>& m_grid,
                                             int targets_per_point,
                                             std::uint64_t seed,
                                             double sigma = 0.0);

}  // namespace pathnet
