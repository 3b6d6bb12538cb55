#include "pathnet/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace pathnet {

namespace {

// Above this unknown count the stacked representation solve switches from
// dense normal equations to conjugate gradients on the matrix form.
constexpr int kDenseUnknownLimit = 1100;
constexpr int kCgMaxIterations = 240;
constexpr double kCgTolerance = 1e-11;

void check_bundle(const TaskBundle& bundle) {
  if (bundle.tasks.empty()) {
    throw std::invalid_argument("solver: empty bundle");
  }
  for (std::size_t t = 0; t < bundle.tasks.size(); ++t) {
    if (bundle.tasks[t].x.rows() < 1) {
      throw std::invalid_argument("solver: task " + std::to_string(t) +
                                  " has no samples");
    }
    if (bundle.tasks[t].x.rows() != bundle.tasks[t].y.size()) {
      throw std::invalid_argument("solver: task " + std::to_string(t) +
                                  " has mismatched X and y");
    }
  }
}

// Per-task input-level caches shared by all representation updates.
struct TaskCache {
  std::vector<Mat> gram;    // X^T X, p x p
  std::vector<Vec> xty;     // X^T y
  std::vector<double> weight;  // 1 / N_t
};

TaskCache build_cache(const TaskBundle& bundle) {
  TaskCache cache;
  const std::size_t t_count = bundle.tasks.size();
  cache.gram.reserve(t_count);
  cache.xty.reserve(t_count);
  cache.weight.reserve(t_count);
  for (const TaskDataset& task : bundle.tasks) {
    cache.gram.push_back(task.x.transpose() * task.x);
    cache.xty.push_back(task.x.transpose() * task.y);
    cache.weight.push_back(1.0 / static_cast<double>(task.x.rows()));
  }
  return cache;
}

// min over B (d_out x d_in) of sum_t w_t ||y_t - W_t B^T g_t||^2 where
// task t enters through its gram W_t^T W_t and moment W_t^T y_t.
struct RepLsProblem {
  std::vector<const Mat*> grams;
  std::vector<const Vec*> moments;
  std::vector<const Vec*> lefts;   // g_t
  std::vector<double> weights;
  int d_out = 0;
  int d_in = 0;
  double ridge = 0.0;
};

Mat rep_ls_rhs(const RepLsProblem& problem) {
  Mat rhs = Mat::Zero(problem.d_out, problem.d_in);
  for (std::size_t t = 0; t < problem.grams.size(); ++t) {
    rhs.noalias() +=
        problem.weights[t] * (*problem.lefts[t]) * problem.moments[t]->transpose();
  }
  return rhs;
}

Mat rep_ls_apply(const RepLsProblem& problem, const Mat& b) {
  Mat out = problem.ridge * b;
  for (std::size_t t = 0; t < problem.grams.size(); ++t) {
    const Vec& g = *problem.lefts[t];
    const Vec projected = b.transpose() * g;              // d_in
    out.noalias() += problem.weights[t] * g * (*problem.grams[t] * projected).transpose();
  }
  return out;
}

Mat solve_rep_ls_dense(const RepLsProblem& problem, bool min_norm) {
  const int d_out = problem.d_out;
  const int d_in = problem.d_in;
  const int unknowns = d_out * d_in;
  Mat normal = Mat::Zero(unknowns, unknowns);
  Vec rhs = Vec::Zero(unknowns);
  for (std::size_t t = 0; t < problem.grams.size(); ++t) {
    const Vec& g = *problem.lefts[t];
    const Mat& s = *problem.grams[t];
    const double w = problem.weights[t];
    for (int a = 0; a < d_out; ++a) {
      rhs.segment(a * d_in, d_in) += w * g(a) * (*problem.moments[t]);
      for (int b = a; b < d_out; ++b) {
        normal.block(a * d_in, b * d_in, d_in, d_in) += (w * g(a) * g(b)) * s;
      }
    }
  }
  for (int a = 1; a < d_out; ++a) {
    for (int b = 0; b < a; ++b) {
      normal.block(a * d_in, b * d_in, d_in, d_in) =
          normal.block(b * d_in, a * d_in, d_in, d_in).transpose();
    }
  }
  if (problem.ridge > 0.0) {
    normal.diagonal().array() += problem.ridge;
  }
  Vec flat;
  if (min_norm) {
    flat = pinv_solve_normal(normal, rhs);
  } else {
    flat = normal.ldlt().solve(rhs);
  }
  Mat b(d_out, d_in);
  for (int a = 0; a < d_out; ++a) b.row(a) = flat.segment(a * d_in, d_in);
  return b;
}

Mat solve_rep_ls_cg(const RepLsProblem& problem, const Mat& warm_start) {
  const Mat rhs = rep_ls_rhs(problem);
  Mat b = warm_start;
  Mat residual = rhs - rep_ls_apply(problem, b);
  Mat direction = residual;
  double rho = residual.squaredNorm();
  const double stop = kCgTolerance * kCgTolerance * rhs.squaredNorm();
  for (int iter = 0; iter < kCgMaxIterations && rho > stop; ++iter) {
    const Mat applied = rep_ls_apply(problem, direction);
    const double curvature = direction.cwiseProduct(applied).sum();
    if (curvature <= 0.0) break;
    const double alpha = rho / curvature;
    b += alpha * direction;
    residual -= alpha * applied;
    const double rho_next = residual.squaredNorm();
    direction = residual + (rho_next / rho) * direction;
    rho = rho_next;
  }
  return b;
}

Mat solve_rep_ls(const RepLsProblem& problem, const Mat& warm_start,
                 bool min_norm_fallback) {
  if (problem.d_out * problem.d_in <= kDenseUnknownLimit) {
    return solve_rep_ls_dense(problem, min_norm_fallback);
  }
  return solve_rep_ls_cg(problem, warm_start);
}

// Running per-task loss table; total is the task-averaged training loss.
struct LossTable {
  std::vector<double> per_task;
  double total = 0.0;

  void refresh_total() {
    total = std::accumulate(per_task.begin(), per_task.end(), 0.0) /
            static_cast<double>(per_task.size());
  }
};

double task_loss(const TaskDataset& task, const Vec& theta) {
  return (task.y - task.x * theta).squaredNorm() /
         static_cast<double>(task.x.rows());
}

Vec ridge_head(const Mat& features, const Vec& targets, double ridge) {
  if (ridge <= 0.0) return pinv_least_squares(features, targets);
  Mat normal = features.transpose() * features;
  normal.diagonal().array() += ridge;
  return normal.ldlt().solve(features.transpose() * targets);
}

// Row-orthonormalization after a representation update. The mixing factor
// is folded into the heads (or the layer above) so the predictor is
// unchanged; the operator-norm clamp, when set, is a genuine projection.
Mat project_module(const Mat& m, const SolverOptions& options) {
  Mat projected = orthonormalize_rows(m);
  if (options.norm_bound_c) {
    projected = clamp_operator_norm(projected, *options.norm_bound_c);
  }
  return projected;
}

struct VanillaState {
  Mat rep;                 // R x p
  std::vector<Vec> heads;  // R each
};

// One-layer ALS engine; also the per-cluster worker for cluster MTL.
VanillaState run_vanilla_als(const TaskBundle& bundle, const TaskCache& cache,
                             Mat init, const SolverOptions& options,
                             int segment, std::vector<AlsEvent>& trace,
                             int& rounds_done, double& final_loss) {
  const int t_count = bundle.task_count();
  VanillaState state;
  state.rep = std::move(init);
  state.heads.assign(static_cast<std::size_t>(t_count),
                     Vec::Zero(state.rep.rows()));

  // Zero heads to start, so the initial loss is the zero-predictor loss.
  LossTable losses;
  losses.per_task.assign(static_cast<std::size_t>(t_count), 0.0);
  for (int t = 0; t < t_count; ++t) {
    losses.per_task[static_cast<std::size_t>(t)] =
        bundle.tasks[static_cast<std::size_t>(t)].y.squaredNorm() /
        static_cast<double>(bundle.tasks[static_cast<std::size_t>(t)].x.rows());
  }
  losses.refresh_total();

  auto update_heads = [&]() {
    const double before = losses.total;
    for (int t = 0; t < t_count; ++t) {
      const TaskDataset& task = bundle.tasks[static_cast<std::size_t>(t)];
      const Mat features = task.x * state.rep.transpose();
      state.heads[static_cast<std::size_t>(t)] =
          ridge_head(features, task.y, options.ridge);
      losses.per_task[static_cast<std::size_t>(t)] =
          task_loss(task, state.rep.transpose() * state.heads[static_cast<std::size_t>(t)]);
    }
    losses.refresh_total();
    trace.push_back({AlsEvent::Kind::kHeads, segment, before, losses.total});
  };

  auto eval_rep = [&](const Mat& rep, std::vector<double>& out) {
    for (int t = 0; t < t_count; ++t) {
      out[static_cast<std::size_t>(t)] = task_loss(
          bundle.tasks[static_cast<std::size_t>(t)],
          rep.transpose() * state.heads[static_cast<std::size_t>(t)]);
    }
  };

  std::vector<double> scratch(static_cast<std::size_t>(t_count), 0.0);
  auto update_rep = [&]() {
    const double before = losses.total;
    RepLsProblem problem;
    problem.d_out = static_cast<int>(state.rep.rows());
    problem.d_in = static_cast<int>(state.rep.cols());
    problem.ridge = options.ridge;
    for (int t = 0; t < t_count; ++t) {
      problem.grams.push_back(&cache.gram[static_cast<std::size_t>(t)]);
      problem.moments.push_back(&cache.xty[static_cast<std::size_t>(t)]);
      problem.lefts.push_back(&state.heads[static_cast<std::size_t>(t)]);
      problem.weights.push_back(cache.weight[static_cast<std::size_t>(t)]);
    }
    Mat candidate = solve_rep_ls(problem, state.rep, false);
    eval_rep(candidate, scratch);
    double after = std::accumulate(scratch.begin(), scratch.end(), 0.0) /
                   static_cast<double>(t_count);
    if (options.ridge <= 0.0 && after > before * (1.0 + 1e-12)) {
      // Fast path misbehaved (singular normal equations); take the
      // min-norm solution instead.
      candidate = solve_rep_ls_dense(problem, true);
      eval_rep(candidate, scratch);
      after = std::accumulate(scratch.begin(), scratch.end(), 0.0) /
              static_cast<double>(t_count);
    }
    if (after <= before * (1.0 + 1e-12) || options.ridge > 0.0) {
      state.rep = std::move(candidate);
      losses.per_task = scratch;
      losses.total = after;
    }
    trace.push_back({AlsEvent::Kind::kRepLs, segment, before, losses.total});

    const double pre_projection = losses.total;
    const RowOrthonormalFactor factor =
        orthonormalize_rows_with_factor(state.rep);
    state.rep = factor.q;
    for (Vec& head : state.heads) head = factor.mixing.transpose() * head;
    if (options.norm_bound_c) {
      state.rep = clamp_operator_norm(state.rep, *options.norm_bound_c);
    }
    eval_rep(state.rep, losses.per_task);
    losses.refresh_total();
    trace.push_back(
        {AlsEvent::Kind::kProjection, segment, pre_projection, losses.total});
  };

  double round_end = std::numeric_limits<double>::max();
  rounds_done = 0;
  for (int round = 0; round < options.max_als_rounds; ++round) {
    update_heads();
    update_rep();
    ++rounds_done;
    const double current = losses.total;
    if (round_end - current <= options.tol * std::max(round_end, 1e-300)) {
      round_end = current;
      break;
    }
    round_end = current;
  }
  // Leaves heads consistent with the projected representation.
  update_heads();
  final_loss = losses.total;
  return state;
}

std::vector<std::vector<int>> group_by_cluster(const std::vector<int>& ids,
                                               int t_count) {
  if (static_cast<int>(ids.size()) != t_count) {
    throw std::invalid_argument("solver: cluster id list length != task count");
  }
  int k = 0;
  for (int id : ids) {
    if (id < 1) throw std::invalid_argument("solver: cluster ids are 1-based");
    k = std::max(k, id);
  }
  std::vector<std::vector<int>> members(static_cast<std::size_t>(k));
  for (int t = 0; t < t_count; ++t) {
    members[static_cast<std::size_t>(ids[static_cast<std::size_t>(t)] - 1)]
        .push_back(t);
  }
  for (int c = 0; c < k; ++c) {
    if (members[static_cast<std::size_t>(c)].empty()) {
      throw std::invalid_argument("solver: cluster " + std::to_string(c + 1) +
                                  " has no tasks");
    }
  }
  return members;
}

TaskBundle sub_bundle(const TaskBundle& bundle, const std::vector<int>& tasks) {
  TaskBundle sub;
  sub.seed = bundle.seed;
  for (int t : tasks) sub.tasks.push_back(bundle.tasks[static_cast<std::size_t>(t)]);
  return sub;
}

}  // namespace

std::string to_string(Method method) {
  switch (method) {
    case Method::kVanilla: return "vanilla";
    case Method::kCluster: return "cluster";
    case Method::kMultipath: return "multipath";
    case Method::kIndividual: return "individual";
  }
  return "unknown";
}

Vec task_predictor(const MtlSolution& solution, int task) {
  const Mat rep = compose(solution.net, solution.pathways[static_cast<std::size_t>(task)]);
  return rep.transpose() * solution.heads[static_cast<std::size_t>(task)];
}

double train_loss(const MtlSolution& solution, const TaskBundle& bundle) {
  double total = 0.0;
  for (int t = 0; t < bundle.task_count(); ++t) {
    total += task_loss(bundle.tasks[static_cast<std::size_t>(t)],
                       task_predictor(solution, t));
  }
  return total / static_cast<double>(bundle.task_count());
}

Mat mom_init_vanilla(const TaskBundle& bundle, int rank) {
  check_bundle(bundle);
  const int p = static_cast<int>(bundle.tasks.front().x.cols());
  if (rank < 1 || rank > p) {
    throw std::invalid_argument("mom_init_vanilla: R out of range");
  }
  Mat moment = Mat::Zero(p, p);
  for (const TaskDataset& task : bundle.tasks) {
    const Vec theta_hat =
        task.x.transpose() * task.y / static_cast<double>(task.x.rows());
    moment.noalias() += theta_hat * theta_hat.transpose();
  }
  return top_eigvecs(moment, rank);
}

MultipathInit mom_init_multipath(const TaskBundle& bundle, int shared_rank,
                                 int cluster_rank,
                                 const std::vector<int>& cluster_ids) {
  check_bundle(bundle);
  const auto members = group_by_cluster(cluster_ids, bundle.task_count());
  MultipathInit init;
  init.b1 = mom_init_vanilla(bundle, shared_rank);
  for (std::size_t c = 0; c < members.size(); ++c) {
    const TaskBundle cluster_bundle = sub_bundle(bundle, members[c]);
    if (cluster_bundle.task_count() < cluster_rank) {
      init.warnings.push_back("cluster " + std::to_string(c + 1) + " has " +
                              std::to_string(cluster_bundle.task_count()) +
                              " tasks < r=" + std::to_string(cluster_rank) +
                              "; rank-deficient init");
    }
    const Mat wide = mom_init_vanilla(cluster_bundle, cluster_rank);  // r x p
    init.b2.push_back(orthonormalize_rows(wide * init.b1.transpose()));
  }
  return init;
}

MtlSolution solve_vanilla(const TaskBundle& bundle, int rank,
                          const SolverOptions& options) {
  check_bundle(bundle);
  const TaskCache cache = build_cache(bundle);
  const int p = static_cast<int>(bundle.tasks.front().x.cols());

  MtlSolution solution;
  solution.method = Method::kVanilla;
  int rounds = 0;
  double final_loss = 0.0;
  VanillaState state =
      run_vanilla_als(bundle, cache, mom_init_vanilla(bundle, rank), options,
                      0, solution.trace, rounds, final_loss);

  solution.net.config = SupernetConfig{1, {1}, {p, rank}};
  solution.net.modules = {{state.rep}};
  solution.heads = std::move(state.heads);
  solution.pathways.assign(static_cast<std::size_t>(bundle.task_count()),
                           Pathway{{1}});
  solution.iterations_run = rounds;
  solution.final_train_loss = final_loss;
  return solution;
}

MtlSolution solve_cluster(const TaskBundle& bundle, int rank,
                          const std::vector<int>& cluster_ids,
                          const SolverOptions& options) {
  check_bundle(bundle);
  const auto members = group_by_cluster(cluster_ids, bundle.task_count());
  const int p = static_cast<int>(bundle.tasks.front().x.cols());
  const int k = static_cast<int>(members.size());

  MtlSolution solution;
  solution.method = Method::kCluster;
  solution.net.config = SupernetConfig{1, {k}, {p, rank}};
  solution.net.modules.resize(1);
  solution.heads.assign(static_cast<std::size_t>(bundle.task_count()), Vec());
  solution.pathways.assign(static_cast<std::size_t>(bundle.task_count()),
                           Pathway{{1}});

  double weighted_loss = 0.0;
  for (int c = 0; c < k; ++c) {
    const TaskBundle cluster_bundle = sub_bundle(bundle, members[static_cast<std::size_t>(c)]);
    const TaskCache cache = build_cache(cluster_bundle);
    int rounds = 0;
    double final_loss = 0.0;
    VanillaState state = run_vanilla_als(
        cluster_bundle, cache, mom_init_vanilla(cluster_bundle, rank), options,
        c, solution.trace, rounds, final_loss);
    solution.net.modules[0].push_back(std::move(state.rep));
    for (std::size_t i = 0; i < members[static_cast<std::size_t>(c)].size(); ++i) {
      const int t = members[static_cast<std::size_t>(c)][i];
      solution.heads[static_cast<std::size_t>(t)] = state.heads[i];
      solution.pathways[static_cast<std::size_t>(t)] = Pathway{{c + 1}};
    }
    solution.iterations_run = std::max(solution.iterations_run, rounds);
    weighted_loss += final_loss *
                     static_cast<double>(members[static_cast<std::size_t>(c)].size());
    if (cluster_bundle.task_count() < rank) {
      solution.warnings.push_back("cluster " + std::to_string(c + 1) +
                                  " has fewer tasks than r");
    }
  }
  solution.final_train_loss =
      weighted_loss / static_cast<double>(bundle.task_count());
  return solution;
}

MtlSolution solve_multipath(const TaskBundle& bundle, int shared_rank,
                            int cluster_rank,
                            const std::vector<int>& cluster_ids,
                            const SolverOptions& options) {
  check_bundle(bundle);
  const auto members = group_by_cluster(cluster_ids, bundle.task_count());
  const TaskCache cache = build_cache(bundle);
  const int t_count = bundle.task_count();
  const int p = static_cast<int>(bundle.tasks.front().x.cols());
  const int k = static_cast<int>(members.size());

  MultipathInit init =
      mom_init_multipath(bundle, shared_rank, cluster_rank, cluster_ids);
  Mat b1 = std::move(init.b1);
  std::vector<Mat> b2 = std::move(init.b2);

  MtlSolution solution;
  solution.method = Method::kMultipath;
  solution.warnings = std::move(init.warnings);
  std::vector<Vec> heads(static_cast<std::size_t>(t_count),
                         Vec::Zero(cluster_rank));

  LossTable losses;
  losses.per_task.assign(static_cast<std::size_t>(t_count), 0.0);
  auto theta_of = [&](int t) {
    const int c = cluster_ids[static_cast<std::size_t>(t)] - 1;
    return Vec(b1.transpose() * (b2[static_cast<std::size_t>(c)].transpose() *
                                 heads[static_cast<std::size_t>(t)]));
  };
  auto refresh_task = [&](int t) {
    losses.per_task[static_cast<std::size_t>(t)] =
        task_loss(bundle.tasks[static_cast<std::size_t>(t)], theta_of(t));
  };
  for (int t = 0; t < t_count; ++t) refresh_task(t);
  losses.refresh_total();

  auto update_heads = [&]() {
    const double before = losses.total;
    for (int t = 0; t < t_count; ++t) {
      const int c = cluster_ids[static_cast<std::size_t>(t)] - 1;
      const TaskDataset& task = bundle.tasks[static_cast<std::size_t>(t)];
      const Mat features =
          task.x * (b2[static_cast<std::size_t>(c)] * b1).transpose();
      heads[static_cast<std::size_t>(t)] =
          ridge_head(features, task.y, options.ridge);
      refresh_task(t);
    }
    losses.refresh_total();
    solution.trace.push_back({AlsEvent::Kind::kHeads, 0, before, losses.total});
  };

  auto update_second_layer = [&]() {
    for (int c = 0; c < k; ++c) {
      const auto& cluster = members[static_cast<std::size_t>(c)];
      // Grams and moments pushed into the R-dimensional layer-2 input
      // space: W = X B1^T so W^T W = B1 (X^T X) B1^T.
      std::vector<Mat> grams;
      std::vector<Vec> moments;
      grams.reserve(cluster.size());
      moments.reserve(cluster.size());
      RepLsProblem problem;
      problem.d_out = cluster_rank;
      problem.d_in = shared_rank;
      problem.ridge = options.ridge;
      for (int t : cluster) {
        grams.push_back(b1 * cache.gram[static_cast<std::size_t>(t)] * b1.transpose());
        moments.push_back(b1 * cache.xty[static_cast<std::size_t>(t)]);
      }
      for (std::size_t i = 0; i < cluster.size(); ++i) {
        const int t = cluster[i];
        problem.grams.push_back(&grams[i]);
        problem.moments.push_back(&moments[i]);
        problem.lefts.push_back(&heads[static_cast<std::size_t>(t)]);
        problem.weights.push_back(cache.weight[static_cast<std::size_t>(t)]);
      }

      const double before = losses.total;
      double cluster_before = 0.0;
      for (int t : cluster) {
        cluster_before += losses.per_task[static_cast<std::size_t>(t)];
      }
      auto cluster_sum = [&]() {
        double sum = 0.0;
        for (int t : cluster) {
          refresh_task(t);
          sum += losses.per_task[static_cast<std::size_t>(t)];
        }
        return sum;
      };
      Mat& block = b2[static_cast<std::size_t>(c)];
      const Mat saved = block;
      block = solve_rep_ls(problem, block, false);
      double cluster_after = cluster_sum();
      const double slack = 1e-12 * (1.0 + cluster_before);
      if (options.ridge <= 0.0 && cluster_after > cluster_before + slack) {
        block = solve_rep_ls_dense(problem, true);
        cluster_after = cluster_sum();
        if (cluster_after > cluster_before + slack) {
          block = saved;
          cluster_sum();
        }
      }
      losses.refresh_total();
      solution.trace.push_back(
          {AlsEvent::Kind::kRepLs, 0, before, losses.total});

      const double pre_projection = losses.total;
      const RowOrthonormalFactor factor = orthonormalize_rows_with_factor(block);
      block = factor.q;
      for (int t : cluster) {
        heads[static_cast<std::size_t>(t)] =
            factor.mixing.transpose() * heads[static_cast<std::size_t>(t)];
      }
      if (options.norm_bound_c) {
        block = clamp_operator_norm(block, *options.norm_bound_c);
      }
      for (int t : cluster) refresh_task(t);
      losses.refresh_total();
      solution.trace.push_back(
          {AlsEvent::Kind::kProjection, 0, pre_projection, losses.total});
    }
  };

  std::vector<Vec> effective(static_cast<std::size_t>(t_count));
  auto update_first_layer = [&]() {
    const double before = losses.total;
    RepLsProblem problem;
    problem.d_out = shared_rank;
    problem.d_in = p;
    problem.ridge = options.ridge;
    for (int t = 0; t < t_count; ++t) {
      const int c = cluster_ids[static_cast<std::size_t>(t)] - 1;
      effective[static_cast<std::size_t>(t)] =
          b2[static_cast<std::size_t>(c)].transpose() *
          heads[static_cast<std::size_t>(t)];
      problem.grams.push_back(&cache.gram[static_cast<std::size_t>(t)]);
      problem.moments.push_back(&cache.xty[static_cast<std::size_t>(t)]);
      problem.lefts.push_back(&effective[static_cast<std::size_t>(t)]);
      problem.weights.push_back(cache.weight[static_cast<std::size_t>(t)]);
    }
    const Mat saved = b1;
    b1 = solve_rep_ls(problem, b1, false);
    for (int t = 0; t < t_count; ++t) refresh_task(t);
    losses.refresh_total();
    if (options.ridge <= 0.0 && losses.total > before * (1.0 + 1e-12)) {
      if (problem.d_out * problem.d_in <= kDenseUnknownLimit) {
        b1 = solve_rep_ls_dense(problem, true);
      } else {
        b1 = saved;
      }
      for (int t = 0; t < t_count; ++t) refresh_task(t);
      losses.refresh_total();
      if (losses.total > before * (1.0 + 1e-12)) {
        b1 = saved;
        for (int t = 0; t < t_count; ++t) refresh_task(t);
        losses.refresh_total();
      }
    }
    solution.trace.push_back({AlsEvent::Kind::kRepLs, 0, before, losses.total});

    const double pre_projection = losses.total;
    if (!options.norm_bound_c) {
      // Fold the mixing into the layer above; predictions are unchanged.
      const RowOrthonormalFactor factor = orthonormalize_rows_with_factor(b1);
      b1 = factor.q;
      for (Mat& block : b2) block = block * factor.mixing;
    } else {
      // Folding would break the layer-2 norm bound; project both instead.
      b1 = project_module(b1, options);
    }
    for (int t = 0; t < t_count; ++t) refresh_task(t);
    losses.refresh_total();
    solution.trace.push_back(
        {AlsEvent::Kind::kProjection, 0, pre_projection, losses.total});
  };

  double round_end = std::numeric_limits<double>::max();
  for (int round = 0; round < options.max_als_rounds; ++round) {
    update_heads();
    update_second_layer();
    update_first_layer();
    ++solution.iterations_run;
    const double current = losses.total;
    if (round_end - current <= options.tol * std::max(round_end, 1e-300)) {
      round_end = current;
      break;
    }
    round_end = current;
  }
  // Leave layer-2 blocks orthonormal (the first-layer fold above may have
  // spoiled them), then refit heads against the final representation.
  for (int c = 0; c < k; ++c) {
    Mat& block = b2[static_cast<std::size_t>(c)];
    const RowOrthonormalFactor factor = orthonormalize_rows_with_factor(block);
    block = factor.q;
    for (int t : members[static_cast<std::size_t>(c)]) {
      heads[static_cast<std::size_t>(t)] =
          factor.mixing.transpose() * heads[static_cast<std::size_t>(t)];
    }
    if (options.norm_bound_c) {
      block = clamp_operator_norm(block, *options.norm_bound_c);
    }
  }
  for (int t = 0; t < t_count; ++t) refresh_task(t);
  losses.refresh_total();
  update_heads();

  solution.net.config = SupernetConfig{2, {1, k}, {p, shared_rank, cluster_rank}};
  solution.net.modules.resize(2);
  solution.net.modules[0] = {b1};
  solution.net.modules[1] = b2;
  solution.heads = std::move(heads);
  for (int t = 0; t < t_count; ++t) {
    solution.pathways.push_back(
        Pathway{{1, cluster_ids[static_cast<std::size_t>(t)]}});
  }
  solution.final_train_loss = losses.total;
  return solution;
}

MtlSolution solve_individual(const TaskBundle& bundle) {
  check_bundle(bundle);
  const int p = static_cast<int>(bundle.tasks.front().x.cols());
  const int t_count = bundle.task_count();

  MtlSolution solution;
  solution.method = Method::kIndividual;
  solution.net.config = SupernetConfig{1, {t_count}, {p, 1}};
  solution.net.modules.resize(1);
  double total = 0.0;
  for (int t = 0; t < t_count; ++t) {
    const TaskDataset& task = bundle.tasks[static_cast<std::size_t>(t)];
    const Vec theta = pinv_least_squares(task.x, task.y);
    solution.net.modules[0].push_back(theta.transpose());
    Vec head(1);
    head(0) = 1.0;
    solution.heads.push_back(head);
    solution.pathways.push_back(Pathway{{t + 1}});
    total += task_loss(task, theta);
  }
  solution.final_train_loss = total / static_cast<double>(t_count);
  solution.iterations_run = 1;
  return solution;
}

void save_solution(const MtlSolution& solution, const std::string& directory) {
  namespace fs = std::filesystem;
  fs::create_directories(directory);
  {
    std::ofstream out(fs::path(directory) / "supernet.json");
    out << supernet_to_json(solution.net) << "\n";
  }
  {
    nlohmann::json j;
    j["method"] = to_string(solution.method);
    j["iterations_run"] = solution.iterations_run;
    j["final_train_loss"] = solution.final_train_loss;
    nlohmann::json heads = nlohmann::json::array();
    for (const Vec& h : solution.heads) {
      heads.push_back(std::vector<double>(h.data(), h.data() + h.size()));
    }
    j["heads"] = heads;
    std::ofstream out(fs::path(directory) / "heads.json");
    out << j.dump() << "\n";
  }
  {
    nlohmann::json j;
    nlohmann::json paths = nlohmann::json::array();
    for (const Pathway& path : solution.pathways) {
      std::vector<int> zero_based;
      for (int c : path.choice) zero_based.push_back(c - 1);
      paths.push_back(zero_based);
    }
    j["pathways_zero_based"] = paths;
    std::ofstream out(fs::path(directory) / "pathways.json");
    out << j.dump() << "\n";
  }
}

MtlSolution load_solution(const std::string& directory) {
  namespace fs = std::filesystem;
  auto slurp = [](const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_solution: cannot read " + path.string());
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  MtlSolution solution;
  solution.net = supernet_from_json(slurp(fs::path(directory) / "supernet.json"));
  const nlohmann::json heads_json =
      nlohmann::json::parse(slurp(fs::path(directory) / "heads.json"));
  const std::string method = heads_json.at("method").get<std::string>();
  if (method == "vanilla") solution.method = Method::kVanilla;
  else if (method == "cluster") solution.method = Method::kCluster;
  else if (method == "multipath") solution.method = Method::kMultipath;
  else if (method == "individual") solution.method = Method::kIndividual;
  else throw std::runtime_error("load_solution: unknown method " + method);
  solution.iterations_run = heads_json.at("iterations_run").get<int>();
  solution.final_train_loss = heads_json.at("final_train_loss").get<double>();
  for (const auto& h : heads_json.at("heads")) {
    const auto values = h.get<std::vector<double>>();
    solution.heads.push_back(
        Eigen::Map<const Vec>(values.data(), static_cast<Eigen::Index>(values.size())));
  }
  const nlohmann::json paths_json =
      nlohmann::json::parse(slurp(fs::path(directory) / "pathways.json"));
  for (const auto& p : paths_json.at("pathways_zero_based")) {
    Pathway path;
    for (int c : p.get<std::vector<int>>()) path.choice.push_back(c + 1);
    solution.pathways.push_back(path);
  }
  return solution;
}

}  // namespace pathnet
