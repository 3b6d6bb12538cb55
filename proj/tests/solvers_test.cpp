#include <doctest.h>

#include <cmath>

#include "pathnet/datagen.hpp"
#include "pathnet/risk.hpp"
#include "pathnet/solvers.hpp"

using pathnet::GroundTruth;
using pathnet::Mat;
using pathnet::MtlSolution;
using pathnet::SolverOptions;
using pathnet::TaskBundle;
using pathnet::TaskDataset;
using pathnet::Vec;

namespace {

TaskBundle bundle_for(const GroundTruth& truth, int n, double sigma,
                      std::uint64_t seed) {
  return pathnet::sample_datasets(
      truth, std::vector<int>(static_cast<std::size_t>(truth.task_count()), n),
      sigma, seed);
}

std::vector<int> clusters_of(const GroundTruth& truth) {
  std::vector<int> ids;
  for (const auto& path : truth.pathways) ids.push_back(path.choice.back());
  return ids;
}

// Identity designs make the moment estimator exact: theta_hat = theta / p.
TaskBundle injected_bundle(const std::vector<Vec>& thetas) {
  TaskBundle bundle;
  for (const Vec& theta : thetas) {
    TaskDataset task;
    task.x = Mat::Identity(theta.size(), theta.size());
    task.y = theta;
    bundle.tasks.push_back(std::move(task));
  }
  return bundle;
}

double subspace_distance(const Mat& a, const Mat& b) {
  return (a.transpose() * a - b.transpose() * b).norm();
}

}  // namespace

TEST_CASE("mom_init_vanilla aligns with a single dominant task") {
  const GroundTruth truth = pathnet::sample_hierarchical_truth(8, 3, 1, 1, 1, 2);
  const TaskBundle bundle = bundle_for(truth, 100000, 0.0, 3);
  const Mat b0 = pathnet::mom_init_vanilla(bundle, 1);
  const double cosine = std::abs(b0.row(0).dot(truth.theta[0].transpose()));
  CHECK(cosine >= 0.99);
}

TEST_CASE("mom_init_vanilla recovers an injected rank-2 moment span") {
  Vec e1 = Vec::Zero(6), e4 = Vec::Zero(6);
  e1(0) = 1.0;
  e4(3) = 1.0;
  const TaskBundle bundle = injected_bundle({e1, e4});
  const Mat b0 = pathnet::mom_init_vanilla(bundle, 2);
  const Mat projector = b0.transpose() * b0;
  CHECK((projector * e1 - e1).norm() <= 1e-12);
  CHECK((projector * e4 - e4).norm() <= 1e-12);
  CHECK_THROWS_AS(pathnet::mom_init_vanilla(bundle, 7), std::invalid_argument);
}

TEST_CASE("mom_init_vanilla subspace error shrinks with N at base scale") {
  const std::vector<int> n_values = {5, 10, 20, 40};
  std::vector<double> medians;
  for (int n : n_values) {
    std::vector<double> distances;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const GroundTruth truth =
          pathnet::sample_hierarchical_truth(32, 8, 2, 40, 10, 300 + seed);
      const TaskBundle bundle = bundle_for(truth, n, 0.0, 400 + seed);
      const Mat b0 = pathnet::mom_init_vanilla(bundle, 8);
      distances.push_back(subspace_distance(b0, truth.net.modules[0][0]));
    }
    std::sort(distances.begin(), distances.end());
    medians.push_back(distances[10]);
  }
  for (std::size_t i = 1; i < medians.size(); ++i) {
    CHECK(medians[i] < medians[i - 1]);
  }
}

TEST_CASE("solve_vanilla with full rank recovers a single task exactly") {
  const GroundTruth truth = pathnet::sample_hierarchical_truth(6, 4, 2, 1, 1, 5);
  const TaskBundle bundle = bundle_for(truth, 12, 0.0, 7);
  const MtlSolution sol = pathnet::solve_vanilla(bundle, 6);
  const Vec direct = pathnet::pinv_least_squares(bundle.tasks[0].x, bundle.tasks[0].y);
  CHECK((pathnet::task_predictor(sol, 0) - truth.theta[0]).norm() <= 1e-6);
  CHECK((pathnet::task_predictor(sol, 0) - direct).norm() <= 1e-6);
}

TEST_CASE("solve_vanilla on all-zero labels returns zero heads") {
  TaskBundle bundle;
  pathnet::Rng rng(11);
  for (int t = 0; t < 3; ++t) {
    TaskDataset task;
    task.x = Mat::Zero(5, 4);
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < 4; ++j) task.x(i, j) = rng.normal();
    }
    task.y = Vec::Zero(5);
    bundle.tasks.push_back(std::move(task));
  }
  const MtlSolution sol = pathnet::solve_vanilla(bundle, 2);
  CHECK(sol.final_train_loss <= 1e-24);
  for (const Vec& head : sol.heads) CHECK(head.norm() <= 1e-12);
}

TEST_CASE("solve_vanilla beats the zero predictor at base scale") {
  std::vector<double> risks;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const GroundTruth truth =
        pathnet::sample_hierarchical_truth(32, 8, 2, 40, 10, 900 + seed);
    const TaskBundle bundle = bundle_for(truth, 10, 0.0, 901 + seed);
    SolverOptions options;
    options.max_als_rounds = 30;
    const MtlSolution sol = pathnet::solve_vanilla(bundle, 8, options);
    risks.push_back(pathnet::report(sol, truth).task_avg);
  }
  std::sort(risks.begin(), risks.end());
  CHECK(risks[2] < 1.0);  // zero-predictor risk is ||theta*||^2 = 1
}

TEST_CASE("solve_vanilla rejects an empty bundle") {
  TaskBundle bundle;
  CHECK_THROWS_AS(pathnet::solve_vanilla(bundle, 2), std::invalid_argument);
}

TEST_CASE("solve_cluster with one cluster equals solve_vanilla") {
  const GroundTruth truth = pathnet::sample_hierarchical_truth(10, 3, 3, 1, 6, 13);
  const TaskBundle bundle = bundle_for(truth, 8, 0.1, 17);
  const MtlSolution vanilla = pathnet::solve_vanilla(bundle, 3);
  const MtlSolution cluster = pathnet::solve_cluster(
      bundle, 3, std::vector<int>(6, 1));
  for (int t = 0; t < 6; ++t) {
    CHECK((pathnet::task_predictor(vanilla, t) -
           pathnet::task_predictor(cluster, t)).norm() == 0.0);
  }
}

TEST_CASE("solve_cluster is invariant to permuting cluster labels") {
  const GroundTruth truth = pathnet::sample_hierarchical_truth(12, 4, 2, 2, 5, 19);
  const TaskBundle bundle = bundle_for(truth, 9, 0.0, 23);
  const std::vector<int> ids = clusters_of(truth);
  std::vector<int> swapped;
  for (int id : ids) swapped.push_back(id == 1 ? 2 : 1);
  const MtlSolution a = pathnet::solve_cluster(bundle, 2, ids);
  const MtlSolution b = pathnet::solve_cluster(bundle, 2, swapped);
  for (int t = 0; t < bundle.task_count(); ++t) {
    CHECK((pathnet::task_predictor(a, t) - pathnet::task_predictor(b, t)).norm() <=
          1e-10);
  }
}

TEST_CASE("solve_cluster names an empty cluster in its error") {
  const GroundTruth truth = pathnet::sample_hierarchical_truth(8, 3, 2, 2, 3, 29);
  const TaskBundle bundle = bundle_for(truth, 5, 0.0, 31);
  std::vector<int> ids(6, 3);  // clusters 1 and 2 empty
  try {
    pathnet::solve_cluster(bundle, 2, ids);
    FAIL("expected an exception");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("cluster 1") != std::string::npos);
  }
}

TEST_CASE("mom_init_multipath reproduces exactly contained cluster spans") {
  // Injected moments: thetas lie in known orthogonal cluster subspaces of a
  // shared 4-dim span inside R^8.
  std::vector<Vec> thetas;
  std::vector<int> ids;
  for (int c = 0; c < 2; ++c) {
    for (int i = 0; i < 2; ++i) {
      Vec theta = Vec::Zero(8);
      theta(2 * c + i) = 1.0;
      thetas.push_back(theta);
      ids.push_back(c + 1);
    }
  }
  const TaskBundle bundle = injected_bundle(thetas);
  const auto init = pathnet::mom_init_multipath(bundle, 4, 2, ids);
  CHECK(init.warnings.empty());
  for (int c = 0; c < 2; ++c) {
    const Mat span = init.b2[static_cast<std::size_t>(c)] * init.b1;  // r x p
    const Mat projector = span.transpose() * span;
    for (int i = 0; i < 2; ++i) {
      const Vec& theta = thetas[static_cast<std::size_t>(2 * c + i)];
      CHECK((projector * theta - theta).norm() <= 1e-6);
    }
  }
}

TEST_CASE("mom_init_multipath warns on clusters smaller than r") {
  const GroundTruth truth = pathnet::sample_hierarchical_truth(10, 4, 3, 2, 2, 37);
  const TaskBundle bundle = bundle_for(truth, 6, 0.0, 41);
  const auto init = pathnet::mom_init_multipath(bundle, 4, 3, clusters_of(truth));
  CHECK(init.warnings.size() == 2);
  CHECK(init.b2[0].rows() == 3);
  // Rows stay orthonormal even in the rank-deficient case.
  CHECK((init.b2[0] * init.b2[0].transpose() - Mat::Identity(3, 3)).norm() <= 1e-8);
}

TEST_CASE("mom_init_multipath beats a random-baseline subspace at base scale") {
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const GroundTruth truth =
        pathnet::sample_hierarchical_truth(32, 8, 2, 40, 10, 1300 + seed);
    const TaskBundle bundle = bundle_for(truth, 10, 0.0, 1400 + seed);
    const auto init =
        pathnet::mom_init_multipath(bundle, 8, 2, clusters_of(truth));
    pathnet::Rng rng(1500 + seed);
    double init_distance = 0.0, random_distance = 0.0;
    for (int c = 0; c < 40; ++c) {
      const Mat planted =
          truth.net.modules[1][static_cast<std::size_t>(c)] * truth.net.modules[0][0];
      const Mat estimated = init.b2[static_cast<std::size_t>(c)] * init.b1;
      init_distance += subspace_distance(estimated, planted);
      const Mat random_b2 = pathnet::sample_haar_rows(2, 8, rng);
      random_distance += subspace_distance(random_b2 * init.b1, planted);
    }
    if (init_distance < random_distance) ++wins;
  }
  CHECK(wins >= 11);  // median strictly better
}

TEST_CASE("solve_multipath with one cluster matches vanilla predictors") {
  const GroundTruth truth = pathnet::sample_hierarchical_truth(10, 2, 2, 1, 6, 43);
  const TaskBundle bundle = bundle_for(truth, 40, 0.0, 47);
  SolverOptions options;
  options.max_als_rounds = 300;
  options.tol = 1e-14;
  const MtlSolution vanilla = pathnet::solve_vanilla(bundle, 2, options);
  const MtlSolution multipath = pathnet::solve_multipath(
      bundle, 2, 2, std::vector<int>(6, 1), options);
  for (int t = 0; t < bundle.task_count(); ++t) {
    CHECK((pathnet::task_predictor(vanilla, t) -
           pathnet::task_predictor(multipath, t)).norm() <= 1e-6);
  }
}

TEST_CASE("solve_multipath interpolates noiseless data at generous N") {
  const GroundTruth truth = pathnet::sample_hierarchical_truth(32, 8, 2, 40, 10, 53);
  const TaskBundle bundle = bundle_for(truth, 40, 0.0, 59);
  SolverOptions options;
  options.max_als_rounds = 200;
  options.tol = 1e-13;
  const MtlSolution sol =
      pathnet::solve_multipath(bundle, 8, 2, clusters_of(truth), options);
  CHECK(sol.final_train_loss <= 1e-10);
}

TEST_CASE("solve_individual matches the pinv oracle per task") {
  const GroundTruth truth = pathnet::sample_hierarchical_truth(8, 4, 2, 2, 3, 61);
  SUBCASE("overdetermined noiseless tasks have zero excess risk") {
    const TaskBundle bundle = bundle_for(truth, 20, 0.0, 67);
    const MtlSolution sol = pathnet::solve_individual(bundle);
    for (int t = 0; t < bundle.task_count(); ++t) {
      CHECK((pathnet::task_predictor(sol, t) -
             truth.theta[static_cast<std::size_t>(t)]).norm() <= 1e-8);
    }
  }
  SUBCASE("underdetermined tasks interpolate with the min-norm solution") {
    const TaskBundle bundle = bundle_for(truth, 3, 0.2, 71);
    const MtlSolution sol = pathnet::solve_individual(bundle);
    CHECK(sol.final_train_loss <= 1e-20);
    for (int t = 0; t < bundle.task_count(); ++t) {
      const Vec oracle = pathnet::pinv_least_squares(
          bundle.tasks[static_cast<std::size_t>(t)].x,
          bundle.tasks[static_cast<std::size_t>(t)].y);
      CHECK((pathnet::task_predictor(sol, t) - oracle).norm() <= 1e-12);
    }
  }
}

TEST_CASE("ALS least-squares steps never increase the loss") {
  const GroundTruth truth = pathnet::sample_hierarchical_truth(16, 5, 2, 4, 5, 73);
  const TaskBundle bundle = bundle_for(truth, 7, 0.3, 79);
  SolverOptions options;
  options.max_als_rounds = 15;
  auto check_trace = [](const MtlSolution& sol) {
    int segments_checked = 0;
    for (const auto& event : sol.trace) {
      if (event.kind == pathnet::AlsEvent::Kind::kProjection) continue;
      CHECK(event.loss_after <=
            event.loss_before * (1.0 + 1e-9) + 1e-15);
      ++segments_checked;
    }
    CHECK(segments_checked > 0);
  };
  check_trace(pathnet::solve_vanilla(bundle, 5, options));
  check_trace(pathnet::solve_cluster(bundle, 2, clusters_of(truth), options));
  check_trace(pathnet::solve_multipath(bundle, 5, 2, clusters_of(truth), options));
}

TEST_CASE("solvers are bit-for-bit deterministic") {
  const GroundTruth truth = pathnet::sample_hierarchical_truth(12, 4, 2, 3, 4, 83);
  const TaskBundle bundle = bundle_for(truth, 6, 0.1, 89);
  SolverOptions options;
  options.max_als_rounds = 12;
  const MtlSolution a = pathnet::solve_multipath(bundle, 4, 2, clusters_of(truth), options);
  const MtlSolution b = pathnet::solve_multipath(bundle, 4, 2, clusters_of(truth), options);
  CHECK(a.final_train_loss == b.final_train_loss);
  for (std::size_t t = 0; t < a.heads.size(); ++t) {
    CHECK((a.heads[t] - b.heads[t]).norm() == 0.0);
  }
  for (int l = 0; l < 2; ++l) {
    for (std::size_t k = 0; k < a.net.modules[static_cast<std::size_t>(l)].size(); ++k) {
      CHECK((a.net.modules[static_cast<std::size_t>(l)][k] -
             b.net.modules[static_cast<std::size_t>(l)][k]).norm() == 0.0);
    }
  }
}

TEST_CASE("norm bound keeps modules inside the operator-norm ball") {
  const GroundTruth truth = pathnet::sample_hierarchical_truth(10, 4, 2, 2, 4, 97);
  const TaskBundle bundle = bundle_for(truth, 8, 0.2, 101);
  SolverOptions options;
  options.max_als_rounds = 8;
  options.norm_bound_c = 0.9;
  const MtlSolution sol =
      pathnet::solve_multipath(bundle, 4, 2, clusters_of(truth), options);
  for (const auto& layer : sol.net.modules) {
    for (const Mat& module : layer) {
      Eigen::JacobiSVD<Mat> svd(module);
      CHECK(svd.singularValues()(0) <= 0.9 + 1e-8);
    }
  }
}

TEST_CASE("solution serialization round trips through the three files") {
  const GroundTruth truth = pathnet::sample_hierarchical_truth(8, 3, 2, 2, 3, 103);
  const TaskBundle bundle = bundle_for(truth, 6, 0.0, 107);
  SolverOptions options;
  options.max_als_rounds = 5;
  const MtlSolution sol =
      pathnet::solve_multipath(bundle, 3, 2, clusters_of(truth), options);
  const std::string dir = "solution_roundtrip_tmp";
  pathnet::save_solution(sol, dir);
  const MtlSolution back = pathnet::load_solution(dir);
  CHECK(back.method == sol.method);
  CHECK(back.final_train_loss == sol.final_train_loss);
  for (std::size_t t = 0; t < sol.heads.size(); ++t) {
    CHECK((back.heads[t] - sol.heads[t]).norm() == 0.0);
    CHECK(back.pathways[t].choice == sol.pathways[t].choice);
  }
}
