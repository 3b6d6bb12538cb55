#include "pathnet/numerics.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "pathnet/rng.hpp"

namespace pathnet {

namespace {

void check_symmetric(const Mat& m, double tol) {
  if (m.rows() != m.cols()) {
    throw std::invalid_argument("symmetric op: matrix is " +
                                std::to_string(m.rows()) + "x" +
                                std::to_string(m.cols()));
  }
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > tol) {
    throw std::invalid_argument("symmetric op: asymmetry " +
                                std::to_string(asym) + " exceeds tolerance");
  }
}

void fix_row_signs(Mat& rows) {
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    Eigen::Index argmax = 0;
    rows.row(i).cwiseAbs().maxCoeff(&argmax);
    if (rows(i, argmax) < 0.0) rows.row(i) = -rows.row(i);
  }
}

}  // namespace

Vec pinv_least_squares(const Mat& x, const Vec& y) {
  if (x.rows() != y.size()) {
    throw std::invalid_argument("pinv_least_squares: X has " +
                                std::to_string(x.rows()) + " rows but y has " +
                                std::to_string(y.size()) + " entries");
  }
  if (x.rows() < 1 || x.cols() < 1) {
    throw std::invalid_argument("pinv_least_squares: empty system");
  }
  Eigen::JacobiSVD<Mat> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& sv = svd.singularValues();
  const double cutoff = kPinvCutoff * sv(0);
  Vec coeffs = svd.matrixU().transpose() * y;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    coeffs(i) = sv(i) > cutoff ? coeffs(i) / sv(i) : 0.0;
  }
  return svd.matrixV() * coeffs;
}

Vec pinv_solve_normal(const Mat& gram, const Vec& rhs) {
  check_symmetric(gram, 1e-6 * (1.0 + gram.cwiseAbs().maxCoeff()));
  Eigen::SelfAdjointEigenSolver<Mat> eig(gram);
  const Vec& ev = eig.eigenvalues();  // ascending
  const double top = std::max(ev.cwiseAbs().maxCoeff(), 0.0);
  // Eigenvalues of X^T X are squared singular values of X.
  const double cutoff = kPinvCutoff * kPinvCutoff * top;
  Vec coeffs = eig.eigenvectors().transpose() * rhs;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    coeffs(i) = ev(i) > cutoff && ev(i) > 0.0 ? coeffs(i) / ev(i) : 0.0;
  }
  return eig.eigenvectors() * coeffs;
}

Mat top_eigvecs(const Mat& m, int k) {
  check_symmetric(m, 1e-9);
  const int d = static_cast<int>(m.rows());
  if (k < 1 || k > d) {
    throw std::invalid_argument("top_eigvecs: k=" + std::to_string(k) +
                                " out of range for d=" + std::to_string(d));
  }
  Eigen::SelfAdjointEigenSolver<Mat> eig(0.5 * (m + m.transpose()));
  Mat rows(k, d);
  for (int i = 0; i < k; ++i) {
    rows.row(i) = eig.eigenvectors().col(d - 1 - i).transpose();
  }
  fix_row_signs(rows);
  return rows;
}

Vec spectrum(const Mat& m) {
  check_symmetric(m, 1e-9);
  Eigen::SelfAdjointEigenSolver<Mat> eig(0.5 * (m + m.transpose()),
                                         Eigen::EigenvaluesOnly);
  return eig.eigenvalues().reverse();
}

namespace {

double squared_distance(const Mat& points, Eigen::Index i, const Mat& centroids,
                        Eigen::Index c) {
  return (points.row(i) - centroids.row(c)).squaredNorm();
}

Mat seed_plusplus(const Mat& points, int k, Rng& rng) {
  const Eigen::Index t = points.rows();
  Mat centroids(k, points.cols());
  centroids.row(0) = points.row(static_cast<Eigen::Index>(rng.below(t)));
  Vec dist2 = (points.rowwise() - centroids.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = dist2.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      double target = rng.uniform() * total;
      for (Eigen::Index i = 0; i < t; ++i) {
        target -= dist2(i);
        if (target <= 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<Eigen::Index>(rng.below(t));
    }
    centroids.row(c) = points.row(pick);
    dist2 = dist2.cwiseMin(
        (points.rowwise() - centroids.row(c)).rowwise().squaredNorm());
  }
  return centroids;
}

double assign(const Mat& points, const Mat& centroids,
              std::vector<int>& labels) {
  double objective = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    int best = 0;
    double best_d = squared_distance(points, i, centroids, 0);
    for (Eigen::Index c = 1; c < centroids.rows(); ++c) {
      const double d = squared_distance(points, i, centroids, c);
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(c);
      }
    }
    labels[static_cast<std::size_t>(i)] = best;
    objective += best_d;
  }
  return objective;
}

KmeansResult lloyd(const Mat& points, int k, Rng rng, int max_iterations) {
  const Eigen::Index t = points.rows();
  KmeansResult result;
  result.centroids = seed_plusplus(points, k, rng);
  result.assignments.assign(static_cast<std::size_t>(t), 0);

  double prev_objective = std::numeric_limits<double>::infinity();
  std::vector<int> prev_labels;
  for (int iter = 0; iter < max_iterations; ++iter) {
    result.objective = assign(points, result.centroids, result.assignments);
    assert(result.objective <= prev_objective * (1.0 + 1e-12) + 1e-12);
    prev_objective = result.objective;
    if (result.assignments == prev_labels) break;
    prev_labels = result.assignments;

    // Recompute centroids; reseed empties from the farthest point.
    Mat sums = Mat::Zero(k, points.cols());
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < t; ++i) {
      const int c = result.assignments[static_cast<std::size_t>(i)];
      sums.row(c) += points.row(i);
      ++counts[static_cast<std::size_t>(c)];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        result.centroids.row(c) =
            sums.row(c) / counts[static_cast<std::size_t>(c)];
      }
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) continue;
      Eigen::Index farthest = 0;
      double best = -1.0;
      for (Eigen::Index i = 0; i < t; ++i) {
        const int owner = result.assignments[static_cast<std::size_t>(i)];
        if (counts[static_cast<std::size_t>(owner)] <= 1) continue;
        const double d = squared_distance(points, i, result.centroids, owner);
        if (d > best) {
          best = d;
          farthest = i;
        }
      }
      const int old = result.assignments[static_cast<std::size_t>(farthest)];
      --counts[static_cast<std::size_t>(old)];
      result.centroids.row(c) = points.row(farthest);
      result.assignments[static_cast<std::size_t>(farthest)] = c;
      counts[static_cast<std::size_t>(c)] = 1;
      prev_objective = std::numeric_limits<double>::infinity();
      prev_labels.clear();
    }
  }
  result.objective = assign(points, result.centroids, result.assignments);
  return result;
}

// Guarantees K nonempty clusters when the points are not all identical.
void enforce_nonempty(const Mat& points, int k, KmeansResult& result) {
  std::vector<int> counts(static_cast<std::size_t>(k), 0);
  for (int label : result.assignments) ++counts[static_cast<std::size_t>(label)];
  for (int c = 0; c < k; ++c) {
    if (counts[static_cast<std::size_t>(c)] > 0) continue;
    Eigen::Index farthest = -1;
    double best = -1.0;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
      const int owner = result.assignments[static_cast<std::size_t>(i)];
      if (counts[static_cast<std::size_t>(owner)] <= 1) continue;
      const double d = squared_distance(points, i, result.centroids, owner);
      if (d > best) {
        best = d;
        farthest = i;
      }
    }
    if (farthest < 0) continue;  // all donor clusters are singletons
    const int old = result.assignments[static_cast<std::size_t>(farthest)];
    --counts[static_cast<std::size_t>(old)];
    result.assignments[static_cast<std::size_t>(farthest)] = c;
    result.centroids.row(c) = points.row(farthest);
    counts[static_cast<std::size_t>(c)] = 1;
  }
  result.objective = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    result.objective += squared_distance(
        points, i, result.centroids,
        result.assignments[static_cast<std::size_t>(i)]);
  }
}

}  // namespace

KmeansResult kmeans(const Mat& points, int k, std::uint64_t seed, int restarts,
                    int max_iterations) {
  if (k < 1 || k > points.rows()) {
    throw std::invalid_argument("kmeans: K=" + std::to_string(k) +
                                " invalid for T=" + std::to_string(points.rows()));
  }
  Rng root(seed);
  KmeansResult best;
  best.objective = std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(restarts, 1); ++r) {
    KmeansResult candidate =
        lloyd(points, k, root.substream(static_cast<std::uint64_t>(r)),
              max_iterations);
    if (candidate.objective < best.objective) best = std::move(candidate);
  }
  enforce_nonempty(points, k, best);
  return best;
}

Mat orthonormalize_rows(const Mat& m) {
  if (m.rows() > m.cols()) {
    throw std::invalid_argument("orthonormalize_rows: more rows than columns");
  }
  Eigen::HouseholderQR<Mat> qr(m.transpose());
  Mat q = qr.householderQ() * Mat::Identity(m.cols(), m.rows());
  return q.transpose();
}

RowOrthonormalFactor orthonormalize_rows_with_factor(const Mat& m) {
  if (m.rows() > m.cols()) {
    throw std::invalid_argument("orthonormalize_rows: more rows than columns");
  }
  Eigen::HouseholderQR<Mat> qr(m.transpose());
  RowOrthonormalFactor out;
  const Mat thin_q = qr.householderQ() * Mat::Identity(m.cols(), m.rows());
  out.q = thin_q.transpose();
  const Mat upper = qr.matrixQR()
                        .topRows(m.rows())
                        .triangularView<Eigen::Upper>();
  out.mixing = upper.transpose();
  return out;
}

Mat clamp_operator_norm(const Mat& m, double c) {
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Vec sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) <= c) return m;
  for (Eigen::Index i = 0; i < sv.size(); ++i) sv(i) = std::min(sv(i), c);
  return svd.matrixU() * sv.asDiagonal() * svd.matrixV().transpose();
}

}  // namespace pathnet
