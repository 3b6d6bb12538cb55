#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pathnet/datagen.hpp"
#include "pathnet/numerics.hpp"
#include "pathnet/solvers.hpp"

namespace pathnet {

struct RiskReport {
  std::vector<double> per_task;
  double task_avg = 0.0;
  std::optional<std::pair<double, double>> group_risks;  // (R0, R1)
  std::optional<double> dof_bound;
  std::string notes;
};

std::string risk_report_to_json(const RiskReport& report);

// ||theta_hat - theta*||^2; under isotropic inputs this is the excess
// population risk of the linear predictor.
double excess_risk(const Vec& theta_hat, const Vec& theta_star);

// Per-task excess risks of the composed predictors against the planted
// model; optional 0/1 group labels add per-group averages.
RiskReport report(const MtlSolution& solution, const GroundTruth& truth,
                  const std::vector<int>* groups = nullptr);

// Sum of the smallest eigenvalues: indices ceil((d-q+1)_+) .. d of the
// nonincreasing spectrum.
double tail(const Mat& psd, double q);

struct FairnessReport {
  double majority_risk = 0.0;    // (T0/T) tr(H0 (I - P0))
  double minority_risk = 0.0;    // tr(H1 (I - P1))
  double majority_bound = 0.0;   // Xi T1 / (xi T)
  double minority_bound = 0.0;   // tail(H1, r1 - r T1 / (xi T0))
  bool majority_pass = false;
  bool minority_pass = false;
  double xi = 0.0;               // r * lambda_min(H0)
  double xi_cap = 0.0;           // r * lambda_max(H0) ("Xi")
  double objective = 0.0;        // population objective at the minimizer
  double suboptimal_objective = 0.0;  // the pick-B0 construction, <= T1/T
};

// Population vanilla-MTL minimizer in closed form (top-r eigenvectors of
// the weighted subspace moment) and both theorem inequalities.
FairnessReport fairness_check(const FairnessTruth& truth, int rank);

// Shape-only bound sqrt(L*DoF/(NT)) + sqrt(log_A/N), constants set to 1.
double dof_bound(const SupernetConfig& config, std::int64_t task_count,
                 std::int64_t samples_per_task, double log_pathways);

struct GaussianComplexityResult {
  double estimate = 0.0;
  double std_error = 0.0;
  double bound = 0.0;  // C * R * sqrt(dp/n)
};

// Monte Carlo estimate of the worst-case Gaussian complexity of
// operator-norm-bounded linear maps: (C/n) E ||X^T G||_* over `trials`
// Gaussian draws, with X rows fixed at radius `radius` (a random
// direction configuration; any fixed-radius configuration is admissible
// for the spherical input set).
GaussianComplexityResult gaussian_complexity_linear(int n, int d, int p,
                                                    double c, double radius,
                                                    int trials,
                                                    std::uint64_t seed);

struct NoHarmReport {
  bool precondition_met = false;  // multipath train loss <= tolerance
  double violation_fraction = 0.0;
  double margin = 0.0;
  std::vector<std::pair<double, double>> risks;  // (multipath, individual)
  std::string note;
};

// Compares per-task risks of an interpolating multipath solution against
// individual training; without interpolation the comparison is reported
// but flagged as out of the lemma's precondition.
NoHarmReport no_harm_check(const MtlSolution& multipath,
                           const MtlSolution& individual,
                           const GroundTruth& truth, double interpolation_tol,
                           double margin = 0.05);

}  // namespace pathnet
