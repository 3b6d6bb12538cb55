#include "pathnet/risk.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace pathnet {

std::string risk_report_to_json(const RiskReport& report) {
  nlohmann::json j;
  j["per_task"] = report.per_task;
  j["task_avg"] = report.task_avg;
  if (report.group_risks) {
    j["group_risks"] = {report.group_risks->first, report.group_risks->second};
  }
  if (report.dof_bound) j["dof_bound"] = *report.dof_bound;
  j["notes"] = report.notes;
  return j.dump();
}

double excess_risk(const Vec& theta_hat, const Vec& theta_star) {
  if (theta_hat.size() != theta_star.size()) {
    throw std::invalid_argument("excess_risk: dimension mismatch");
  }
  return (theta_hat - theta_star).squaredNorm();
}

RiskReport report(const MtlSolution& solution, const GroundTruth& truth,
                  const std::vector<int>* groups) {
  const int t_count = truth.task_count();
  if (static_cast<int>(solution.heads.size()) != t_count) {
    throw std::invalid_argument("report: solution and truth task counts differ");
  }
  RiskReport out;
  out.per_task.reserve(static_cast<std::size_t>(t_count));
  for (int t = 0; t < t_count; ++t) {
    out.per_task.push_back(excess_risk(task_predictor(solution, t),
                                       truth.theta[static_cast<std::size_t>(t)]));
  }
  out.task_avg = std::accumulate(out.per_task.begin(), out.per_task.end(), 0.0) /
                 static_cast<double>(t_count);
  if (groups != nullptr) {
    if (static_cast<int>(groups->size()) != t_count) {
      throw std::invalid_argument("report: group label length mismatch");
    }
    double sum0 = 0.0, sum1 = 0.0;
    int count0 = 0, count1 = 0;
    for (int t = 0; t < t_count; ++t) {
      if ((*groups)[static_cast<std::size_t>(t)] == 0) {
        sum0 += out.per_task[static_cast<std::size_t>(t)];
        ++count0;
      } else {
        sum1 += out.per_task[static_cast<std::size_t>(t)];
        ++count1;
      }
    }
    out.group_risks = {count0 > 0 ? sum0 / count0 : 0.0,
                       count1 > 0 ? sum1 / count1 : 0.0};
  }
  return out;
}

double tail(const Mat& psd, double q) {
  const Vec values = spectrum(psd);  // nonincreasing
  const Eigen::Index d = values.size();
  if (q <= 0.0) return 0.0;
  // 1-based start index ceil((d - q + 1)_+), clamped into [1, d+1].
  const double raw = std::max(static_cast<double>(d) - q + 1.0, 0.0);
  Eigen::Index start = static_cast<Eigen::Index>(std::ceil(raw));
  start = std::max<Eigen::Index>(start, 1);
  double sum = 0.0;
  for (Eigen::Index i = start; i <= d; ++i) sum += values(i - 1);
  return sum;
}

FairnessReport fairness_check(const FairnessTruth& truth, int rank) {
  const int t0 = truth.majority_count();
  const int t1 = truth.minority_count();
  if (t0 < 1) throw std::invalid_argument("fairness_check: no majority tasks");
  const int r0_dim = static_cast<int>(truth.subspace0.rows());
  const int r1_dim = static_cast<int>(truth.subspace1.rows());
  const double total = t0 + t1;

  Mat h0 = Mat::Zero(r0_dim, r0_dim);
  Mat h1 = Mat::Zero(r1_dim, r1_dim);
  for (std::size_t t = 0; t < truth.heads.size(); ++t) {
    if (truth.groups[t] == 0) {
      h0.noalias() += truth.heads[t] * truth.heads[t].transpose() / t0;
    } else {
      h1.noalias() += truth.heads[t] * truth.heads[t].transpose() / t1;
    }
  }

  const Vec h0_spectrum = spectrum(h0);
  FairnessReport out;
  out.xi = rank * h0_spectrum(h0_spectrum.size() - 1);
  out.xi_cap = rank * h0_spectrum(0);
  if (out.xi <= 0.0) {
    throw std::invalid_argument(
        "fairness_check: H0 is not positive definite (xi <= 0)");
  }

  // Population objective in closed form; its minimizer over rank-r
  // orthonormal representations is the top eigenspace.
  Mat moment = (t0 / total) * truth.subspace0.transpose() * h0 * truth.subspace0;
  if (t1 > 0) {
    moment.noalias() +=
        (t1 / total) * truth.subspace1.transpose() * h1 * truth.subspace1;
  }
  const Mat rep = top_eigvecs(moment, rank);
  const Mat projector = rep.transpose() * rep;

  const Mat p0 = truth.subspace0 * projector * truth.subspace0.transpose();
  out.majority_risk =
      (t0 / total) * (h0 * (Mat::Identity(r0_dim, r0_dim) - p0)).trace();
  out.majority_bound = out.xi_cap * t1 / (out.xi * total);
  out.majority_pass = out.majority_risk <= out.majority_bound + 1e-8;

  out.objective = out.majority_risk;
  if (t1 > 0) {
    const Mat p1 = truth.subspace1 * projector * truth.subspace1.transpose();
    out.minority_risk = (h1 * (Mat::Identity(r1_dim, r1_dim) - p1)).trace();
    out.minority_bound =
        tail(h1, r1_dim - rank * static_cast<double>(t1) / (out.xi * t0));
    out.minority_pass = out.minority_risk >= out.minority_bound - 1e-8;
    out.objective += (t1 / total) * out.minority_risk;
  } else {
    out.minority_pass = true;
  }
  out.suboptimal_objective = t1 / total;
  return out;
}

double dof_bound(const SupernetConfig& config, std::int64_t task_count,
                 std::int64_t samples_per_task, double log_pathways) {
  if (task_count < 1 || samples_per_task < 1 || log_pathways < 0.0) {
    throw std::invalid_argument("dof_bound: sizes must be positive");
  }
  const double parameters = static_cast<double>(dof(config, task_count));
  const double first =
      std::sqrt(config.layers * parameters /
                static_cast<double>(task_count * samples_per_task));
  const double second = std::sqrt(log_pathways / static_cast<double>(samples_per_task));
  return first + second;
}

GaussianComplexityResult gaussian_complexity_linear(int n, int d, int p,
                                                    double c, double radius,
                                                    int trials,
                                                    std::uint64_t seed) {
  if (n < 1 || d < 1 || p < 1 || trials < 1) {
    throw std::invalid_argument("gaussian_complexity_linear: sizes must be >= 1");
  }
  Rng rng(seed);
  // Fixed radius-R input configuration with random directions.
  Mat x(n, p);
  for (int i = 0; i < n; ++i) {
    Vec row(p);
    double norm2 = 0.0;
    do {
      for (int j = 0; j < p; ++j) row(j) = rng.normal();
      norm2 = row.squaredNorm();
    } while (norm2 == 0.0);
    x.row(i) = radius * row.transpose() / std::sqrt(norm2);
  }

  double sum = 0.0;
  double sum_sq = 0.0;
  Mat g(n, d);
  for (int trial = 0; trial < trials; ++trial) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < d; ++j) g(i, j) = rng.normal();
    }
    // sup over the operator-norm ball is C times the nuclear norm.
    Eigen::JacobiSVD<Mat> svd(x.transpose() * g);
    const double value = c * svd.singularValues().sum() / n;
    sum += value;
    sum_sq += value * value;
  }
  GaussianComplexityResult out;
  out.estimate = sum / trials;
  const double variance =
      std::max(sum_sq / trials - out.estimate * out.estimate, 0.0);
  out.std_error = std::sqrt(variance / trials);
  out.bound = c * radius * std::sqrt(static_cast<double>(d) * p / n);
  return out;
}

NoHarmReport no_harm_check(const MtlSolution& multipath,
                           const MtlSolution& individual,
                           const GroundTruth& truth, double interpolation_tol,
                           double margin) {
  const int t_count = truth.task_count();
  NoHarmReport out;
  out.margin = margin;
  out.precondition_met = multipath.final_train_loss <= interpolation_tol;
  int violations = 0;
  for (int t = 0; t < t_count; ++t) {
    const double mp = excess_risk(task_predictor(multipath, t),
                                  truth.theta[static_cast<std::size_t>(t)]);
    const double ind = excess_risk(task_predictor(individual, t),
                                   truth.theta[static_cast<std::size_t>(t)]);
    out.risks.emplace_back(mp, ind);
    if (mp > ind + margin) ++violations;
  }
  out.violation_fraction =
      static_cast<double>(violations) / static_cast<double>(t_count);
  if (!out.precondition_met) {
    out.note = "lemma precondition unmet: multipath train loss " +
               std::to_string(multipath.final_train_loss) + " > " +
               std::to_string(interpolation_tol);
  }
  return out;
}

}  // namespace pathnet
