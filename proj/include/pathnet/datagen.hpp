#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pathnet/numerics.hpp"
#include "pathnet/rng.hpp"
#include "pathnet/supernet.hpp"

namespace pathnet {

// Planted model: orthonormal-row module weights, unit-norm heads, and the
// composed task vectors theta_t = B_{alpha_t}^T h_t cached alongside.
struct GroundTruth {
  Supernet net;
  std::vector<Vec> heads;
  std::vector<Pathway> pathways;
  std::vector<Vec> theta;

  int task_count() const { return static_cast<int>(heads.size()); }
  void validate() const;
};

struct TaskDataset {
  Mat x;       // N x p
  Vec y;       // N
  double noise_sigma = 0.0;

  int sample_count() const { return static_cast<int>(x.rows()); }
};

struct TaskBundle {
  std::vector<TaskDataset> tasks;
  std::optional<GroundTruth> truth;
  std::uint64_t seed = 0;

  int task_count() const { return static_cast<int>(tasks.size()); }
};

// Two orthogonal planted subspaces with a majority/minority split. Kept
// separate from GroundTruth because the two module heights r and r1 may
// differ, which a Supernet layer cannot represent.
struct FairnessTruth {
  Mat subspace0;               // r x p, orthonormal rows
  Mat subspace1;               // r1 x p, orthonormal rows, orthogonal to subspace0
  std::vector<Vec> heads;      // unit heads; dim r for group 0, r1 for group 1
  std::vector<int> groups;     // 0 for the first T0 tasks, 1 for the last T1
  std::vector<Vec> theta;

  int majority_count() const;
  int minority_count() const;
  // Valid only when r == r1: a single-layer K=2 supernet.
  GroundTruth as_ground_truth() const;
};

struct AdversarialScenario {
  GroundTruth truth;    // L=1, K=2 net; groups 1,2 on path 1 and 3,4 on path 2
  struct Swapped {
    Supernet net;                    // B1 spans S1 u S3, B2 spans S2 u S4
    std::vector<Vec> heads;
    std::vector<Pathway> pathways;
  } swapped;
  std::vector<int> group_of_task;    // values 1..4
};

// Haar-distributed orthonormal rows (QR of a Gaussian with sign-fixed R
// diagonal); rows <= cols required.
Mat sample_haar_rows(int rows, int cols, Rng& rng);

// Two-layer hierarchical model: B1 in R^{R x p}, per-cluster B2^k in
// R^{r x R}, cluster k tasks on pathway (1, k), equal cluster sizes.
GroundTruth sample_hierarchical_truth(int p, int big_r, int r, int k,
                                      int tasks_per_cluster,
                                      std::uint64_t seed);

// Same model with explicit per-cluster task counts (imbalanced setups).
GroundTruth sample_hierarchical_truth(int p, int big_r, int r,
                                      const std::vector<int>& cluster_sizes,
                                      std::uint64_t seed);

// Mixes each head with a fresh per-cluster anchor: gamma * anchor +
// (1 - gamma) * head, renormalized to unit norm; theta recomputed.
GroundTruth correlate_heads(const GroundTruth& truth, double gamma,
                            std::uint64_t seed);

// Per-task Gaussian designs and labels y = X theta* + sigma z; task t draws
// from substream (seed, t) so sample prefixes are shared across N sweeps.
TaskBundle sample_datasets(const GroundTruth& truth,
                           const std::vector<int>& samples_per_task,
                           double sigma, std::uint64_t seed);

FairnessTruth sample_fairness_truth(int p, int r, int r1, int t0, int t1,
                                    std::uint64_t seed);

// Four orthogonal R-dim groups of spanning tasks plus the pathway-swapped
// solution that interpolates the training data.
AdversarialScenario sample_adversarial_scenario(int p, int big_r, int t,
                                                std::uint64_t seed);

// Writes task_<t>.csv files (columns x_1..x_p,y) plus truth.json.
void export_bundle(const TaskBundle& bundle, const std::string& directory);

}  // namespace pathnet
