#include <doctest.h>

#include <cmath>

#include "pathnet/datagen.hpp"
#include "pathnet/solvers.hpp"

using pathnet::GroundTruth;
using pathnet::Mat;
using pathnet::TaskBundle;
using pathnet::Vec;

TEST_CASE("hierarchical truth has unit task vectors at base scale") {
  const GroundTruth truth = pathnet::sample_hierarchical_truth(32, 8, 2, 40, 10, 1);
  CHECK(truth.task_count() == 400);
  for (const Vec& theta : truth.theta) {
    CHECK(std::abs(theta.norm() - 1.0) <= 1e-9);
  }
  for (const Vec& head : truth.heads) {
    CHECK(std::abs(head.norm() - 1.0) <= 1e-9);
  }
}

TEST_CASE("hierarchical truth factors are orthonormal and full rank") {
  const GroundTruth truth = pathnet::sample_hierarchical_truth(16, 6, 3, 4, 5, 9);
  for (const auto& layer : truth.net.modules) {
    for (const Mat& module : layer) {
      const Mat gram = module * module.transpose();
      CHECK((gram - Mat::Identity(gram.rows(), gram.cols())).norm() <= 1e-8);
    }
  }
  // Cluster subspaces B2^k B1 have rank exactly r.
  for (const Mat& b2 : truth.net.modules[1]) {
    Eigen::JacobiSVD<Mat> svd(b2 * truth.net.modules[0][0]);
    CHECK(svd.singularValues().minCoeff() >= 1e-8);
  }
}

TEST_CASE("single-cluster truth stays in one r-dim subspace") {
  const GroundTruth truth = pathnet::sample_hierarchical_truth(12, 5, 2, 1, 8, 3);
  for (const auto& path : truth.pathways) {
    CHECK(path.choice == std::vector<int>{1, 1});
  }
  Mat thetas(truth.task_count(), 12);
  for (int t = 0; t < truth.task_count(); ++t) {
    thetas.row(t) = truth.theta[static_cast<std::size_t>(t)].transpose();
  }
  Eigen::JacobiSVD<Mat> svd(thetas);
  // Only the first r singular values can be nonzero.
  for (int i = 2; i < svd.singularValues().size(); ++i) {
    CHECK(svd.singularValues()(i) <= 1e-9);
  }
}

TEST_CASE("cross-cluster task vectors are uncorrelated on average") {
  // Monte Carlo over fresh seeds: one cross-cluster pair per draw.
  const int draws = 10000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < draws; ++i) {
    const GroundTruth truth = pathnet::sample_hierarchical_truth(
        16, 4, 2, 2, 1, 50000 + static_cast<std::uint64_t>(i));
    const double inner = truth.theta[0].dot(truth.theta[1]);
    sum += inner;
    sum_sq += inner * inner;
  }
  const double mean = sum / draws;
  const double variance = sum_sq / draws - mean * mean;
  const double std_error = std::sqrt(variance / draws);
  CHECK(std::abs(mean) <= 3.0 * std_error);
}

TEST_CASE("sample_hierarchical_truth validates dimension ordering") {
  CHECK_THROWS_AS(pathnet::sample_hierarchical_truth(4, 8, 2, 1, 1, 0),
                  std::invalid_argument);
  CHECK_THROWS_AS(pathnet::sample_hierarchical_truth(8, 4, 5, 1, 1, 0),
                  std::invalid_argument);
}

TEST_CASE("regeneration with the same seed is bit identical") {
  const GroundTruth a = pathnet::sample_hierarchical_truth(10, 4, 2, 3, 4, 77);
  const GroundTruth b = pathnet::sample_hierarchical_truth(10, 4, 2, 3, 4, 77);
  for (std::size_t t = 0; t < a.theta.size(); ++t) {
    CHECK((a.theta[t] - b.theta[t]).norm() == 0.0);
  }
  const TaskBundle da = pathnet::sample_datasets(
      a, std::vector<int>(static_cast<std::size_t>(a.task_count()), 6), 0.3, 5);
  const TaskBundle db = pathnet::sample_datasets(
      b, std::vector<int>(static_cast<std::size_t>(b.task_count()), 6), 0.3, 5);
  for (int t = 0; t < a.task_count(); ++t) {
    CHECK((da.tasks[static_cast<std::size_t>(t)].x -
           db.tasks[static_cast<std::size_t>(t)].x).norm() == 0.0);
    CHECK((da.tasks[static_cast<std::size_t>(t)].y -
           db.tasks[static_cast<std::size_t>(t)].y).norm() == 0.0);
  }
}

TEST_CASE("N sweeps reuse per-task sample prefixes") {
  const GroundTruth truth = pathnet::sample_hierarchical_truth(8, 3, 2, 2, 2, 21);
  const std::size_t t_count = static_cast<std::size_t>(truth.task_count());
  const TaskBundle small =
      pathnet::sample_datasets(truth, std::vector<int>(t_count, 5), 0.1, 99);
  const TaskBundle large =
      pathnet::sample_datasets(truth, std::vector<int>(t_count, 20), 0.1, 99);
  for (std::size_t t = 0; t < t_count; ++t) {
    CHECK((large.tasks[t].x.topRows(5) - small.tasks[t].x).norm() == 0.0);
    CHECK((large.tasks[t].y.head(5) - small.tasks[t].y).norm() == 0.0);
  }
}

TEST_CASE("correlate_heads endpoints") {
  const GroundTruth truth = pathnet::sample_hierarchical_truth(12, 6, 3, 3, 4, 11);
  const GroundTruth unchanged = pathnet::correlate_heads(truth, 0.0, 5);
  for (std::size_t t = 0; t < truth.heads.size(); ++t) {
    CHECK((unchanged.heads[t] - truth.heads[t]).norm() <= 1e-12);
  }
  const GroundTruth collapsed = pathnet::correlate_heads(truth, 1.0, 5);
  for (std::size_t t = 1; t < collapsed.heads.size(); ++t) {
    if (collapsed.pathways[t].choice == collapsed.pathways[t - 1].choice) {
      CHECK((collapsed.heads[t] - collapsed.heads[t - 1]).norm() <= 1e-12);
    }
  }
  CHECK_THROWS_AS(pathnet::correlate_heads(truth, 1.5, 5), std::invalid_argument);
}

TEST_CASE("correlate_heads raises within-cluster cosine above cross-cluster") {
  const GroundTruth truth = pathnet::sample_hierarchical_truth(32, 8, 2, 5, 8, 31);
  const GroundTruth mixed = pathnet::correlate_heads(truth, 0.6, 7);
  double within = 0.0, across = 0.0;
  int within_count = 0, across_count = 0;
  const int t_count = mixed.task_count();
  for (int s = 0; s < t_count; ++s) {
    for (int t = s + 1; t < t_count; ++t) {
      const double cosine = mixed.theta[static_cast<std::size_t>(s)].dot(
          mixed.theta[static_cast<std::size_t>(t)]);
      if (mixed.pathways[static_cast<std::size_t>(s)].choice ==
          mixed.pathways[static_cast<std::size_t>(t)].choice) {
        within += cosine;
        ++within_count;
      } else {
        across += cosine;
        ++across_count;
      }
    }
  }
  CHECK(within / within_count > across / across_count);
}

TEST_CASE("sample_datasets noiseless labels match the planted model") {
  const GroundTruth truth = pathnet::sample_hierarchical_truth(10, 4, 2, 2, 3, 13);
  const TaskBundle bundle = pathnet::sample_datasets(
      truth, std::vector<int>(static_cast<std::size_t>(truth.task_count()), 7),
      0.0, 17);
  for (int t = 0; t < truth.task_count(); ++t) {
    const auto& task = bundle.tasks[static_cast<std::size_t>(t)];
    CHECK((task.y - task.x * truth.theta[static_cast<std::size_t>(t)]).norm() ==
          0.0);
  }
}

TEST_CASE("sample_datasets noise variance concentrates") {
  const GroundTruth truth = pathnet::sample_hierarchical_truth(6, 3, 2, 1, 1, 19);
  const TaskBundle bundle =
      pathnet::sample_datasets(truth, {10000}, 0.5, 23);
  const auto& task = bundle.tasks[0];
  const Vec residual = task.y - task.x * truth.theta[0];
  const double variance = residual.squaredNorm() / residual.size();
  CHECK(variance == doctest::Approx(0.25).epsilon(0.05));
}

TEST_CASE("sample_datasets supports imbalanced per-task sizes") {
  const GroundTruth truth = pathnet::sample_hierarchical_truth(8, 4, 2, 2, 2, 29);
  const TaskBundle bundle =
      pathnet::sample_datasets(truth, {33, 33, 7, 7}, 0.1, 31);
  CHECK(bundle.tasks[0].sample_count() == 33);
  CHECK(bundle.tasks[3].sample_count() == 7);
  CHECK_THROWS_AS(pathnet::sample_datasets(truth, {1, 1, 1}, 0.1, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(pathnet::sample_datasets(truth, {1, 1, 1, 1}, -0.5, 1),
                  std::invalid_argument);
}

TEST_CASE("fairness truth has orthogonal planted subspaces") {
  const auto truth = pathnet::sample_fairness_truth(8, 2, 2, 12, 4, 41);
  CHECK((truth.subspace0 * truth.subspace1.transpose()).norm() <= 1e-10);
  CHECK(truth.majority_count() == 12);
  CHECK(truth.minority_count() == 4);

  // Group-0 task vectors lie in the row span of subspace0.
  const Mat projector = truth.subspace0.transpose() * truth.subspace0;
  for (std::size_t t = 0; t < truth.theta.size(); ++t) {
    if (truth.groups[t] == 0) {
      CHECK((truth.theta[t] - projector * truth.theta[t]).norm() <= 1e-9);
    }
  }

  // H0 is PSD with unit trace.
  Mat h0 = Mat::Zero(2, 2);
  for (std::size_t t = 0; t < truth.heads.size(); ++t) {
    if (truth.groups[t] == 0) {
      h0 += truth.heads[t] * truth.heads[t].transpose() / 12.0;
    }
  }
  CHECK(h0.trace() == doctest::Approx(1.0).epsilon(1e-12));
  Eigen::SelfAdjointEigenSolver<Mat> eig(h0);
  CHECK(eig.eigenvalues().minCoeff() >= -1e-12);

  CHECK_THROWS_AS(pathnet::sample_fairness_truth(3, 2, 2, 4, 2, 1),
                  std::invalid_argument);
}

TEST_CASE("fairness truth converts to a supernet when r == r1") {
  const auto truth = pathnet::sample_fairness_truth(10, 3, 3, 8, 3, 43);
  const GroundTruth net_form = truth.as_ground_truth();
  net_form.validate();
  for (std::size_t t = 0; t < truth.theta.size(); ++t) {
    CHECK((net_form.theta[t] - truth.theta[t]).norm() == 0.0);
  }
}

TEST_CASE("adversarial swapped solution interpolates noiseless data") {
  const auto scenario = pathnet::sample_adversarial_scenario(32, 8, 64, 51);
  const int n = 40;  // N >= p
  const TaskBundle bundle = pathnet::sample_datasets(
      scenario.truth,
      std::vector<int>(static_cast<std::size_t>(scenario.truth.task_count()), n),
      0.0, 53);
  pathnet::MtlSolution swapped;
  swapped.net = scenario.swapped.net;
  swapped.heads = scenario.swapped.heads;
  swapped.pathways = scenario.swapped.pathways;
  swapped.method = pathnet::Method::kCluster;
  CHECK(pathnet::train_loss(swapped, bundle) <= 1e-10);
}

TEST_CASE("adversarial swapped modules have orthonormal rows") {
  const auto scenario = pathnet::sample_adversarial_scenario(36, 8, 32, 55);
  for (const Mat& module : scenario.swapped.net.modules[0]) {
    const Mat gram = module * module.transpose();
    CHECK((gram - Mat::Identity(gram.rows(), gram.cols())).norm() <= 1e-8);
  }
}

TEST_CASE("adversarial swapped pathway reproduces every task vector") {
  const auto scenario = pathnet::sample_adversarial_scenario(32, 8, 32, 57);
  for (int t = 0; t < scenario.truth.task_count(); ++t) {
    const Mat& module =
        scenario.swapped.net.modules[0][static_cast<std::size_t>(
            scenario.swapped.pathways[static_cast<std::size_t>(t)].choice[0] - 1)];
    const Vec theta = scenario.truth.theta[static_cast<std::size_t>(t)];
    // Per-task least squares against the module transpose.
    const Vec head = pathnet::pinv_least_squares(module.transpose(), theta);
    CHECK((module.transpose() * head - theta).norm() <= 1e-9);
  }
}

TEST_CASE("adversarial scenario validates shape constraints") {
  CHECK_THROWS_AS(pathnet::sample_adversarial_scenario(16, 8, 32, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(pathnet::sample_adversarial_scenario(32, 8, 30, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(pathnet::sample_adversarial_scenario(32, 8, 16, 1),
                  std::invalid_argument);
}
