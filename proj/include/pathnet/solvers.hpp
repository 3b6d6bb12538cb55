#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pathnet/datagen.hpp"
#include "pathnet/numerics.hpp"
#include "pathnet/supernet.hpp"

namespace pathnet {

enum class Method { kVanilla, kCluster, kMultipath, kIndividual };
std::string to_string(Method method);

struct SolverOptions {
  int max_als_rounds = 100;
  double tol = 1e-8;  // relative train-loss decrease that stops ALS
  double ridge = 0.0;
  std::optional<double> norm_bound_c;
};

// Loss bookkeeping around every ALS block. Least-squares blocks are
// nonincreasing (ridge = 0); projections may increase the loss and are
// logged separately. Segments separate independent sub-solves (one per
// cluster in cluster MTL).
struct AlsEvent {
  enum class Kind { kHeads, kRepLs, kProjection };
  Kind kind = Kind::kHeads;
  int segment = 0;
  double loss_before = 0.0;
  double loss_after = 0.0;
};

struct MtlSolution {
  Supernet net;
  std::vector<Vec> heads;
  std::vector<Pathway> pathways;
  Method method = Method::kVanilla;
  int iterations_run = 0;
  double final_train_loss = 0.0;
  std::vector<AlsEvent> trace;
  std::vector<std::string> warnings;
};

// Composed per-task predictor theta_t = B_{alpha_t}^T h_t.
Vec task_predictor(const MtlSolution& solution, int task);

// (1/T) sum_t (1/N_t) ||y_t - X_t theta_t||^2.
double train_loss(const MtlSolution& solution, const TaskBundle& bundle);

// Method-of-moments representation estimate: top-R eigenvectors of
// M = sum_t theta_hat_t theta_hat_t^T with theta_hat_t = (1/N) X^T y.
Mat mom_init_vanilla(const TaskBundle& bundle, int rank);

struct MultipathInit {
  Mat b1;                         // R x p
  std::vector<Mat> b2;            // per-cluster r x R
  std::vector<std::string> warnings;
};

// Vanilla init on all data for B1, per-cluster inits projected onto it
// for the B2 blocks; rank-deficient clusters proceed with a warning.
MultipathInit mom_init_multipath(const TaskBundle& bundle, int shared_rank,
                                 int cluster_rank,
                                 const std::vector<int>& cluster_ids);

MtlSolution solve_vanilla(const TaskBundle& bundle, int rank,
                          const SolverOptions& options = {});

// Independent vanilla solves per cluster; cluster ids are 1-based module
// indices and every cluster in [1, max id] must be nonempty.
MtlSolution solve_cluster(const TaskBundle& bundle, int rank,
                          const std::vector<int>& cluster_ids,
                          const SolverOptions& options = {});

// Two-layer ALS cycling heads -> second-layer blocks -> first layer.
MtlSolution solve_multipath(const TaskBundle& bundle, int shared_rank,
                            int cluster_rank,
                            const std::vector<int>& cluster_ids,
                            const SolverOptions& options = {});

// Per-task min-norm least squares, encoded as an L=1, K=T supernet with
// 1 x p modules and unit scalar heads.
MtlSolution solve_individual(const TaskBundle& bundle);

// supernet.json + heads.json + pathways.json under `directory`.
void save_solution(const MtlSolution& solution, const std::string& directory);
MtlSolution load_solution(const std::string& directory);

}  // namespace pathnet
