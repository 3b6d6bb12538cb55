#include "pathnet/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "pathnet/clustering.hpp"
#include "pathnet/risk.hpp"
#include "pathnet/transfer.hpp"

namespace pathnet {

namespace {

const std::map<std::string, Scenario>& scenario_table() {
  static const std::map<std::string, Scenario> table = {
      {"fig2_n", Scenario::kFig2N},
      {"fig2_tbar", Scenario::kFig2Tbar},
      {"fig2_k", Scenario::kFig2K},
      {"fig3_clustering", Scenario::kFig3Clustering},
      {"fig6_samples", Scenario::kFig6Samples},
      {"fig6_tasks", Scenario::kFig6Tasks},
      {"fairness", Scenario::kFairness},
      {"adversarial", Scenario::kAdversarial},
      {"transfer", Scenario::kTransfer},
      {"bound_shape", Scenario::kBoundShape},
  };
  return table;
}

Method method_from_string(const std::string& name) {
  if (name == "vanilla") return Method::kVanilla;
  if (name == "cluster") return Method::kCluster;
  if (name == "multipath") return Method::kMultipath;
  if (name == "individual") return Method::kIndividual;
  throw std::invalid_argument("unknown method: " + name);
}

std::string format_double(double value) {
  std::ostringstream out;
  out.precision(17);
  out << value;
  return out.str();
}

std::vector<int> true_cluster_ids(const GroundTruth& truth) {
  std::vector<int> ids;
  ids.reserve(truth.pathways.size());
  for (const Pathway& path : truth.pathways) ids.push_back(path.choice.back());
  return ids;
}

bool method_enabled(const ExperimentConfig& config, Method method) {
  if (config.methods.empty()) return true;
  return std::find(config.methods.begin(), config.methods.end(), method) !=
         config.methods.end();
}

struct CellContext {
  const ExperimentConfig* config;
  int grid_index;
  int rep;
  double sweep_value;
  std::string sweep_param;
  std::uint64_t seed;
  std::vector<SweepRecord>* records;

  void emit(const std::string& method, const std::string& metric,
            double value) const {
    records->push_back({to_string(config->scenario), method, sweep_param,
                        sweep_value, rep, metric, value, seed});
  }
};

void run_fig2_cell(const CellContext& ctx) {
  const ExperimentConfig& cfg = *ctx.config;
  int k = cfg.k, tbar = cfg.tbar, n = cfg.n;
  switch (cfg.scenario) {
    case Scenario::kFig2N: n = static_cast<int>(ctx.sweep_value); break;
    case Scenario::kFig2Tbar: tbar = static_cast<int>(ctx.sweep_value); break;
    case Scenario::kFig2K: k = static_cast<int>(ctx.sweep_value); break;
    default: break;
  }
  const GroundTruth truth =
      sample_hierarchical_truth(cfg.p, cfg.big_r, cfg.r, k, tbar, ctx.seed);
  const TaskBundle bundle = sample_datasets(
      truth, std::vector<int>(static_cast<std::size_t>(truth.task_count()), n),
      cfg.sigma, ctx.seed);
  const std::vector<int> clusters = true_cluster_ids(truth);

  if (method_enabled(cfg, Method::kVanilla)) {
    const MtlSolution sol = solve_vanilla(bundle, cfg.big_r, cfg.solver);
    ctx.emit("vanilla", "task_avg_excess_risk", report(sol, truth).task_avg);
  }
  if (method_enabled(cfg, Method::kCluster)) {
    const MtlSolution sol = solve_cluster(bundle, cfg.r, clusters, cfg.solver);
    ctx.emit("cluster", "task_avg_excess_risk", report(sol, truth).task_avg);
  }
  if (method_enabled(cfg, Method::kMultipath)) {
    const MtlSolution sol =
        solve_multipath(bundle, cfg.big_r, cfg.r, clusters, cfg.solver);
    ctx.emit("multipath", "task_avg_excess_risk", report(sol, truth).task_avg);
  }
  // Individual training only runs when listed explicitly.
  if (!cfg.methods.empty() && method_enabled(cfg, Method::kIndividual)) {
    const MtlSolution sol = solve_individual(bundle);
    ctx.emit("individual", "task_avg_excess_risk", report(sol, truth).task_avg);
  }
}

void run_fig3_cell(const CellContext& ctx) {
  const ExperimentConfig& cfg = *ctx.config;
  const int n = static_cast<int>(ctx.sweep_value);
  GroundTruth truth =
      sample_hierarchical_truth(cfg.p, cfg.big_r, cfg.r, cfg.k, cfg.tbar, ctx.seed);
  truth = correlate_heads(truth, cfg.gamma, derive_seed(ctx.seed, 101));
  const TaskBundle bundle = sample_datasets(
      truth, std::vector<int>(static_cast<std::size_t>(truth.task_count()), n),
      cfg.sigma, ctx.seed);
  const std::vector<int> true_ids = true_cluster_ids(truth);

  const MtlSolution vanilla = solve_vanilla(bundle, cfg.big_r, cfg.solver);
  ctx.emit("vanilla", "task_avg_excess_risk", report(vanilla, truth).task_avg);

  const Mat theta_hat = estimate_task_vectors(vanilla);
  ClusteringResult learned =
      cluster_tasks(theta_hat, cfg.k, derive_seed(ctx.seed, 202));
  learned.accuracy = clustering_accuracy(learned.assignments, true_ids);
  ctx.emit("kmeans", "clustering_accuracy", *learned.accuracy);

  std::vector<int> learned_ids;
  learned_ids.reserve(learned.assignments.size());
  for (int id : learned.assignments) learned_ids.push_back(id + 1);

  if (method_enabled(cfg, Method::kCluster)) {
    const MtlSolution with_truth = solve_cluster(bundle, cfg.r, true_ids, cfg.solver);
    ctx.emit("cluster", "task_avg_excess_risk_true_alpha",
             report(with_truth, truth).task_avg);
    const MtlSolution with_learned =
        solve_cluster(bundle, cfg.r, learned_ids, cfg.solver);
    ctx.emit("cluster", "task_avg_excess_risk_learned_alpha",
             report(with_learned, truth).task_avg);
  }
  if (method_enabled(cfg, Method::kMultipath)) {
    const MtlSolution with_truth =
        solve_multipath(bundle, cfg.big_r, cfg.r, true_ids, cfg.solver);
    ctx.emit("multipath", "task_avg_excess_risk_true_alpha",
             report(with_truth, truth).task_avg);
    const MtlSolution with_learned =
        solve_multipath(bundle, cfg.big_r, cfg.r, learned_ids, cfg.solver);
    ctx.emit("multipath", "task_avg_excess_risk_learned_alpha",
             report(with_learned, truth).task_avg);
  }
}

void run_fig6_cell(const CellContext& ctx) {
  const ExperimentConfig& cfg = *ctx.config;
  const int k = cfg.k;
  const int poor_clusters = k / 2;

  std::vector<int> cluster_sizes;
  std::vector<int> samples;
  if (cfg.scenario == Scenario::kFig6Samples) {
    const int n_poor = static_cast<int>(ctx.sweep_value);
    cluster_sizes.assign(static_cast<std::size_t>(k), cfg.tbar);
    for (int c = 0; c < k; ++c) {
      for (int i = 0; i < cfg.tbar; ++i) {
        samples.push_back(c < poor_clusters ? n_poor : cfg.n);
      }
    }
  } else {
    const int tbar_poor = static_cast<int>(ctx.sweep_value);
    for (int c = 0; c < k; ++c) {
      cluster_sizes.push_back(c < poor_clusters ? tbar_poor : cfg.tbar);
    }
    int total = 0;
    for (int size : cluster_sizes) total += size;
    samples.assign(static_cast<std::size_t>(total), cfg.n);
  }

  const GroundTruth truth =
      sample_hierarchical_truth(cfg.p, cfg.big_r, cfg.r, cluster_sizes, ctx.seed);
  const TaskBundle bundle = sample_datasets(truth, samples, cfg.sigma, ctx.seed);
  const std::vector<int> clusters = true_cluster_ids(truth);

  // Resource-poor tasks live in the first half of the clusters.
  std::vector<int> poor_mask(static_cast<std::size_t>(truth.task_count()), 0);
  for (int t = 0; t < truth.task_count(); ++t) {
    poor_mask[static_cast<std::size_t>(t)] =
        clusters[static_cast<std::size_t>(t)] <= poor_clusters ? 0 : 1;
  }

  auto emit_split = [&](const std::string& method, const MtlSolution& sol) {
    const RiskReport rep = report(sol, truth, &poor_mask);
    ctx.emit(method, "task_avg_excess_risk", rep.task_avg);
    ctx.emit(method, "excess_risk_poor", rep.group_risks->first);
    ctx.emit(method, "excess_risk_rich", rep.group_risks->second);
  };

  if (method_enabled(cfg, Method::kVanilla)) {
    emit_split("vanilla", solve_vanilla(bundle, cfg.big_r, cfg.solver));
  }
  if (method_enabled(cfg, Method::kCluster)) {
    emit_split("cluster", solve_cluster(bundle, cfg.r, clusters, cfg.solver));
  }
  if (method_enabled(cfg, Method::kMultipath)) {
    emit_split("multipath",
               solve_multipath(bundle, cfg.big_r, cfg.r, clusters, cfg.solver));
  }
}

void run_fairness_cell(const CellContext& ctx) {
  Rng rng(ctx.seed);
  const int r = 1 + static_cast<int>(rng.below(4));        // r = r1 <= 4
  const int p = std::max(2 * r, 8) + static_cast<int>(rng.below(9));  // <= 16
  const int t0 = std::max(r + 1, 10) + static_cast<int>(rng.below(91));
  const int t1 = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(t0)));
  const FairnessTruth truth =
      sample_fairness_truth(std::min(p, 16), r, r, t0, t1, derive_seed(ctx.seed, 7));
  const FairnessReport rep = fairness_check(truth, r);
  ctx.emit("fairness", "majority_risk", rep.majority_risk);
  ctx.emit("fairness", "majority_bound", rep.majority_bound);
  ctx.emit("fairness", "majority_slack", rep.majority_bound - rep.majority_risk);
  ctx.emit("fairness", "minority_risk", rep.minority_risk);
  ctx.emit("fairness", "minority_bound", rep.minority_bound);
  ctx.emit("fairness", "minority_slack", rep.minority_risk - rep.minority_bound);
  ctx.emit("fairness", "both_pass",
           rep.majority_pass && rep.minority_pass ? 1.0 : 0.0);
}

void run_adversarial_cell(const CellContext& ctx) {
  const ExperimentConfig& cfg = *ctx.config;
  const int t = 4 * std::max(cfg.big_r, cfg.tbar);  // tbar = tasks per group
  const AdversarialScenario scenario =
      sample_adversarial_scenario(cfg.p, cfg.big_r, t, ctx.seed);

  // Noiseless training data with N >= p; the swapped net interpolates it.
  const int n = cfg.p + 8;
  const TaskBundle bundle = sample_datasets(
      scenario.truth,
      std::vector<int>(static_cast<std::size_t>(scenario.truth.task_count()), n),
      0.0, ctx.seed);
  MtlSolution swapped;
  swapped.net = scenario.swapped.net;
  swapped.heads = scenario.swapped.heads;
  swapped.pathways = scenario.swapped.pathways;
  swapped.method = Method::kCluster;
  ctx.emit("adversarial", "swapped_train_risk", train_loss(swapped, bundle));

  const int m = static_cast<int>(ctx.sweep_value);
  const int targets = 200;
  const auto swapped_rows = transfer_sweep(scenario.swapped.net, scenario.truth,
                                           {m}, targets, derive_seed(ctx.seed, 11));
  ctx.emit("adversarial", "swapped_mean_excess", swapped_rows.front().mean_excess);
  const auto truth_rows = transfer_sweep(scenario.truth.net, scenario.truth, {m},
                                         targets, derive_seed(ctx.seed, 12));
  ctx.emit("adversarial", "truth_mean_excess", truth_rows.front().mean_excess);
}

void run_transfer_cell(const CellContext& ctx) {
  const ExperimentConfig& cfg = *ctx.config;
  const GroundTruth truth =
      sample_hierarchical_truth(cfg.p, cfg.big_r, cfg.r, cfg.k, cfg.tbar, ctx.seed);
  const TaskBundle bundle = sample_datasets(
      truth,
      std::vector<int>(static_cast<std::size_t>(truth.task_count()), cfg.n),
      cfg.sigma, ctx.seed);
  const MtlSolution sol = solve_multipath(bundle, cfg.big_r, cfg.r,
                                          true_cluster_ids(truth), cfg.solver);
  const int m = static_cast<int>(ctx.sweep_value);
  const auto rows =
      transfer_sweep(sol.net, truth, {m}, 50, derive_seed(ctx.seed, 21));
  ctx.emit("transfer", "mean_excess", rows.front().mean_excess);
  ctx.emit("transfer", "median_excess", rows.front().median);
  ctx.emit("transfer", "q1_excess", rows.front().q1);
  ctx.emit("transfer", "q3_excess", rows.front().q3);
}

void run_bound_shape_cell(const CellContext& ctx) {
  const ExperimentConfig& cfg = *ctx.config;
  const int n = static_cast<int>(ctx.sweep_value);
  const GroundTruth truth =
      sample_hierarchical_truth(cfg.p, cfg.big_r, cfg.r, cfg.k, cfg.tbar, ctx.seed);
  const std::vector<int> clusters = true_cluster_ids(truth);
  const std::size_t t_count = static_cast<std::size_t>(truth.task_count());

  // Paired runs on the same instance; the 4N datasets share the N prefix.
  const TaskBundle small = sample_datasets(
      truth, std::vector<int>(t_count, n), 0.0, ctx.seed);
  const TaskBundle big = sample_datasets(
      truth, std::vector<int>(t_count, 4 * n), 0.0, ctx.seed);
  const MtlSolution sol_small =
      solve_multipath(small, cfg.big_r, cfg.r, clusters, cfg.solver);
  const MtlSolution sol_big =
      solve_multipath(big, cfg.big_r, cfg.r, clusters, cfg.solver);
  const double risk_small = report(sol_small, truth).task_avg;
  const double risk_big = report(sol_big, truth).task_avg;
  ctx.emit("multipath", "excess_risk_n", risk_small);
  ctx.emit("multipath", "excess_risk_4n", risk_big);
  ctx.emit("multipath", "risk_ratio",
           risk_big > 0.0 ? risk_small / risk_big
                          : std::numeric_limits<double>::infinity());
}

int resolve_threads(const ExperimentConfig& config) {
  if (config.threads > 0) return config.threads;
  if (const char* env = std::getenv("PATHNET_THREADS")) {
    const int value = std::atoi(env);
    if (value > 0) return value;
  }
  const unsigned hardware = std::thread::hardware_concurrency();
  return hardware == 0 ? 1 : static_cast<int>(hardware);
}

}  // namespace

std::string to_string(Scenario scenario) {
  for (const auto& [name, value] : scenario_table()) {
    if (value == scenario) return name;
  }
  return "unknown";
}

Scenario scenario_from_string(const std::string& name) {
  const auto it = scenario_table().find(name);
  if (it == scenario_table().end()) {
    throw std::invalid_argument("unknown scenario: " + name);
  }
  return it->second;
}

std::vector<std::string> scenario_names() {
  std::vector<std::string> names;
  for (const auto& [name, value] : scenario_table()) names.push_back(name);
  return names;
}

bool ExperimentConfig::is_explicit(const std::string& key) const {
  return std::find(explicit_keys.begin(), explicit_keys.end(), key) !=
         explicit_keys.end();
}

void ExperimentConfig::mark_explicit(const std::string& key) {
  if (!is_explicit(key)) explicit_keys.push_back(key);
}

void ExperimentConfig::validate() const {
  if (grid.empty()) throw std::invalid_argument("config: empty grid");
  if (reps < 1) throw std::invalid_argument("config: reps must be >= 1");
  if (p < 1 || big_r < 1 || r < 1 || k < 1 || tbar < 1 || n < 1) {
    throw std::invalid_argument("config: model sizes must be >= 1");
  }
  if (r > big_r || big_r > p) {
    throw std::invalid_argument("config: need r <= R <= p");
  }
  if (sigma < 0.0) throw std::invalid_argument("config: sigma must be >= 0");
  if (gamma < 0.0 || gamma > 1.0) {
    throw std::invalid_argument("config: gamma must be in [0,1]");
  }
}

ExperimentConfig apply_scenario_defaults(ExperimentConfig config) {
  auto set_int = [&](const std::string& key, int& field, int value) {
    if (!config.is_explicit(key)) field = value;
  };
  auto set_double = [&](const std::string& key, double& field, double value) {
    if (!config.is_explicit(key)) field = value;
  };
  auto set_grid = [&](std::vector<double> grid) {
    if (!config.is_explicit("grid")) {
      config.grid = std::move(grid);
      config.grid_is_default = true;
    }
  };

  switch (config.scenario) {
    case Scenario::kFig2N:
      set_grid({2, 5, 10, 20, 40});
      break;
    case Scenario::kFig2Tbar:
      set_grid({2, 5, 10, 20});
      break;
    case Scenario::kFig2K:
      set_grid({10, 20, 40, 80});
      break;
    case Scenario::kFig3Clustering:
      set_int("p", config.p, 128);
      set_int("R", config.big_r, 32);
      set_int("K", config.k, 50);
      set_double("gamma", config.gamma, 0.6);
      set_grid({10, 20, 40, 60, 80});
      if (!config.is_explicit("max_als_rounds")) config.solver.max_als_rounds = 25;
      if (!config.is_explicit("tol")) config.solver.tol = 1e-7;
      break;
    case Scenario::kFig6Samples:
      set_int("K", config.k, 20);
      set_int("N", config.n, 33);  // rich half sample size N2
      set_double("sigma", config.sigma, 0.1);
      set_grid({1, 3, 9, 17, 33});
      break;
    case Scenario::kFig6Tasks:
      set_int("K", config.k, 20);
      set_int("tbar", config.tbar, 50);  // rich half cluster size T2
      set_double("sigma", config.sigma, 0.1);
      set_grid({2, 5, 10, 25, 50});
      break;
    case Scenario::kFairness:
      set_grid({0});
      if (!config.is_explicit("reps")) config.reps = 50;
      break;
    case Scenario::kAdversarial:
      set_grid({1000});
      if (!config.is_explicit("reps")) config.reps = 1;
      set_int("tbar", config.tbar, 16);  // tasks per group
      break;
    case Scenario::kTransfer:
      set_int("N", config.n, 40);
      set_grid({1, 2, 4, 8, 16, 32, 64});
      break;
    case Scenario::kBoundShape:
      set_grid({5, 10});
      break;
  }
  return config;
}

std::uint64_t cell_seed(std::uint64_t config_seed, int grid_index, int rep) {
  return derive_seed(config_seed, static_cast<std::uint64_t>(grid_index),
                     static_cast<std::uint64_t>(rep));
}

std::vector<SweepRecord> run_cell(const ExperimentConfig& config,
                                  int grid_index, int rep) {
  std::vector<SweepRecord> records;
  CellContext ctx;
  ctx.config = &config;
  ctx.grid_index = grid_index;
  ctx.rep = rep;
  ctx.sweep_value = config.grid[static_cast<std::size_t>(grid_index)];
  ctx.seed = cell_seed(config.seed, grid_index, rep);
  ctx.records = &records;
  switch (config.scenario) {
    case Scenario::kFig2N: ctx.sweep_param = "N"; run_fig2_cell(ctx); break;
    case Scenario::kFig2Tbar: ctx.sweep_param = "tbar"; run_fig2_cell(ctx); break;
    case Scenario::kFig2K: ctx.sweep_param = "K"; run_fig2_cell(ctx); break;
    case Scenario::kFig3Clustering:
      ctx.sweep_param = "N";
      run_fig3_cell(ctx);
      break;
    case Scenario::kFig6Samples:
      ctx.sweep_param = "N1";
      run_fig6_cell(ctx);
      break;
    case Scenario::kFig6Tasks:
      ctx.sweep_param = "tbar1";
      run_fig6_cell(ctx);
      break;
    case Scenario::kFairness:
      ctx.sweep_param = "instance";
      run_fairness_cell(ctx);
      break;
    case Scenario::kAdversarial:
      ctx.sweep_param = "M";
      run_adversarial_cell(ctx);
      break;
    case Scenario::kTransfer:
      ctx.sweep_param = "M";
      run_transfer_cell(ctx);
      break;
    case Scenario::kBoundShape:
      ctx.sweep_param = "N";
      run_bound_shape_cell(ctx);
      break;
  }
  return records;
}

std::vector<SweepRecord> run_sweep(const ExperimentConfig& config) {
  config.validate();
  const int grid_size = static_cast<int>(config.grid.size());
  const int cells = grid_size * config.reps;
  std::vector<std::vector<SweepRecord>> results(static_cast<std::size_t>(cells));

  const int threads = std::min(resolve_threads(config), cells);
  std::atomic<int> next{0};
  std::mutex error_mutex;
  std::string first_error;
  auto worker = [&]() {
    for (;;) {
      const int cell = next.fetch_add(1);
      if (cell >= cells) return;
      const int grid_index = cell / config.reps;
      const int rep = cell % config.reps;
      try {
        results[static_cast<std::size_t>(cell)] = run_cell(config, grid_index, rep);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (first_error.empty()) first_error = e.what();
        return;
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (!first_error.empty()) {
    throw std::runtime_error("sweep failed: " + first_error);
  }

  // Canonical order: grid index, method, rep, metric.
  std::vector<std::pair<int, SweepRecord>> tagged;
  for (int cell = 0; cell < cells; ++cell) {
    for (SweepRecord& record : results[static_cast<std::size_t>(cell)]) {
      tagged.emplace_back(cell / config.reps, std::move(record));
    }
  }
  std::stable_sort(tagged.begin(), tagged.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    if (a.second.method != b.second.method) return a.second.method < b.second.method;
    if (a.second.rep != b.second.rep) return a.second.rep < b.second.rep;
    return a.second.metric_name < b.second.metric_name;
  });
  std::vector<SweepRecord> records;
  records.reserve(tagged.size());
  for (auto& [index, record] : tagged) records.push_back(std::move(record));
  return records;
}

std::string records_to_csv(const std::vector<SweepRecord>& records) {
  std::string out =
      "scenario,method,sweep_param,sweep_value,rep,metric_name,metric_value,"
      "seed_used\n";
  for (const SweepRecord& r : records) {
    out += r.scenario + "," + r.method + "," + r.sweep_param + "," +
           format_double(r.sweep_value) + "," + std::to_string(r.rep) + "," +
           r.metric_name + "," + format_double(r.metric_value) + "," +
           std::to_string(r.seed_used) + "\n";
  }
  return out;
}

std::string records_to_json(const std::vector<SweepRecord>& records) {
  nlohmann::json array = nlohmann::json::array();
  for (const SweepRecord& r : records) {
    array.push_back({{"scenario", r.scenario},
                     {"method", r.method},
                     {"sweep_param", r.sweep_param},
                     {"sweep_value", r.sweep_value},
                     {"rep", r.rep},
                     {"metric_name", r.metric_name},
                     {"metric_value", r.metric_value},
                     {"seed_used", r.seed_used}});
  }
  return array.dump();
}

Aggregate aggregate(std::vector<double> values) {
  Aggregate out;
  if (values.empty()) return out;
  std::sort(values.begin(), values.end());
  auto at = [&](double q) {
    const double position = q * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(position);
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = position - static_cast<double>(lo);
    return values[lo] * (1.0 - frac) + values[hi] * frac;
  };
  out.q1 = at(0.25);
  out.median = at(0.5);
  out.q3 = at(0.75);
  return out;
}

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig config;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto begin = line.find_first_not_of(" \t\r");
    if (begin == std::string::npos) continue;
    const auto end = line.find_last_not_of(" \t\r");
    line = line.substr(begin, end - begin + 1);
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": expected key=value");
    }
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      if (b == std::string::npos) return std::string();
      const auto e = s.find_last_not_of(" \t");
      return s.substr(b, e - b + 1);
    };
    key = trim(key);
    value = trim(value);

    auto parse_doubles = [&](const std::string& s) {
      std::vector<double> values;
      std::istringstream parts(s);
      std::string item;
      while (std::getline(parts, item, ',')) values.push_back(std::stod(item));
      return values;
    };

    if (key == "scenario") config.scenario = scenario_from_string(value);
    else if (key == "p") config.p = std::stoi(value);
    else if (key == "R") config.big_r = std::stoi(value);
    else if (key == "r") config.r = std::stoi(value);
    else if (key == "K") config.k = std::stoi(value);
    else if (key == "tbar") config.tbar = std::stoi(value);
    else if (key == "N") config.n = std::stoi(value);
    else if (key == "sigma") config.sigma = std::stod(value);
    else if (key == "gamma") config.gamma = std::stod(value);
    else if (key == "grid") {
      config.grid = parse_doubles(value);
      config.grid_is_default = false;
    } else if (key == "reps") config.reps = std::stoi(value);
    else if (key == "seed") config.seed = std::stoull(value);
    else if (key == "methods") {
      config.methods.clear();
      std::istringstream parts(value);
      std::string item;
      while (std::getline(parts, item, ',')) {
        config.methods.push_back(method_from_string(item));
      }
    } else if (key == "out") config.out_path = value;
    else if (key == "format") {
      if (value == "csv") config.format = OutputFormat::kCsv;
      else if (value == "json") config.format = OutputFormat::kJson;
      else throw std::invalid_argument("config: format must be csv or json");
    } else if (key == "threads") config.threads = std::stoi(value);
    else if (key == "max_als_rounds") config.solver.max_als_rounds = std::stoi(value);
    else if (key == "tol") config.solver.tol = std::stod(value);
    else if (key == "ridge") config.solver.ridge = std::stod(value);
    else {
      throw std::invalid_argument("config: unknown key '" + key + "'");
    }
    config.mark_explicit(key);
  }
  return config;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_config_text(text);
}

int run_scenario(const ExperimentConfig& raw, std::ostream& out,
                 std::ostream& err) {
  try {
    const ExperimentConfig config = apply_scenario_defaults(raw);
    config.validate();
    const std::vector<SweepRecord> records = run_sweep(config);

    if (config.grid_is_default) {
      out << "grids=artifact_default\n";
    }
    // One summary line per grid point: median per (method, metric).
    for (std::size_t gi = 0; gi < config.grid.size(); ++gi) {
      const double value = config.grid[gi];
      std::map<std::string, std::vector<double>> buckets;
      std::string param;
      for (const SweepRecord& r : records) {
        if (r.sweep_value == value) {
          buckets[r.method + ":" + r.metric_name].push_back(r.metric_value);
          param = r.sweep_param;
        }
      }
      out << to_string(config.scenario) << " " << param << "=" << value;
      for (const auto& [key, values] : buckets) {
        out << " " << key << "=" << aggregate(values).median;
      }
      out << "\n";
    }

    if (!config.out_path.empty()) {
      std::ofstream file(config.out_path, std::ios::binary);
      if (!file) {
        err << "cannot write output file: " << config.out_path << "\n";
        return 3;
      }
      file << (config.format == OutputFormat::kCsv ? records_to_csv(records)
                                                   : records_to_json(records));
    }
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace pathnet
