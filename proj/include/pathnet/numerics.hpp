#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace pathnet {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Relative singular-value cutoff used by every pseudo-inverse solve.
inline constexpr double kPinvCutoff = 1e-10;

// Minimum-norm solution of min ||X theta - y||. Rank deficiency is fine;
// dimension mismatch throws.
Vec pinv_least_squares(const Mat& x, const Vec& y);

// Min-norm solve against precomputed normal equations G theta = c where
// G = X^T X (PSD). Same cutoff policy as pinv_least_squares.
Vec pinv_solve_normal(const Mat& gram, const Vec& rhs);

// Rows are the orthonormal eigenvectors of the k largest eigenvalues of a
// symmetric matrix, eigenvalue order nonincreasing. Sign fixed so each
// row's largest-magnitude entry is positive. Asymmetry beyond 1e-9 or
// k > d throws.
Mat top_eigvecs(const Mat& m, int k);

// All eigenvalues of a symmetric matrix, sorted nonincreasing.
Vec spectrum(const Mat& m);

struct KmeansResult {
  std::vector<int> assignments;  // cluster ids in [0, k)
  Mat centroids;                 // k x d
  double objective = 0.0;        // within-cluster sum of squares
};

// Lloyd's algorithm with k-means++ seeding, best of `restarts` by WCSS.
// Deterministic given seed. Empty clusters are reseeded from the point
// farthest from its centroid. k > number of points throws.
KmeansResult kmeans(const Mat& points, int k, std::uint64_t seed,
                    int restarts = 10, int max_iterations = 300);

// Orthonormalizes the rows of a fat matrix (rows <= cols) via QR of the
// transpose; row span is preserved.
Mat orthonormalize_rows(const Mat& m);

struct RowOrthonormalFactor {
  Mat q;       // orthonormal rows, same span as the input
  Mat mixing;  // square factor with input = mixing * q
};

// Factorization m = mixing * q used to re-balance a factor model without
// changing its predictions.
RowOrthonormalFactor orthonormalize_rows_with_factor(const Mat& m);

// Projects onto the operator-norm ball of radius c by clamping singular values.
Mat clamp_operator_norm(const Mat& m, double c);

}  // namespace pathnet
