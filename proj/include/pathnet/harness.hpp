#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "pathnet/solvers.hpp"

namespace pathnet {

enum class Scenario {
  kFig2N,
  kFig2Tbar,
  kFig2K,
  kFig3Clustering,
  kFig6Samples,
  kFig6Tasks,
  kFairness,
  kAdversarial,
  kTransfer,
  kBoundShape,
};

std::string to_string(Scenario scenario);
Scenario scenario_from_string(const std::string& name);
std::vector<std::string> scenario_names();

enum class OutputFormat { kCsv, kJson };

struct ExperimentConfig {
  Scenario scenario = Scenario::kFig2N;
  // Model parameters; scenario defaults fill whatever the user leaves unset.
  int p = 32;
  int big_r = 8;
  int r = 2;
  int k = 40;
  int tbar = 10;
  int n = 10;
  double sigma = 0.0;
  double gamma = 0.6;
  std::vector<double> grid;           // empty -> scenario default grid
  bool grid_is_default = true;
  int reps = 20;
  std::uint64_t seed = 1;
  std::vector<Method> methods;        // empty -> scenario default
  std::string out_path;
  OutputFormat format = OutputFormat::kCsv;
  int threads = 0;                    // 0 -> PATHNET_THREADS or hardware
  SolverOptions solver;
  // Keys the user set explicitly; scenario defaults skip these.
  std::vector<std::string> explicit_keys;

  bool is_explicit(const std::string& key) const;
  void mark_explicit(const std::string& key);
  void validate() const;
};

struct SweepRecord {
  std::string scenario;
  std::string method;
  std::string sweep_param;
  double sweep_value = 0.0;
  int rep = 0;
  std::string metric_name;
  double metric_value = 0.0;
  std::uint64_t seed_used = 0;
};

// Applies per-scenario defaults (grids, model parameters, solver budget)
// to fields the user left at their sentinel values.
ExperimentConfig apply_scenario_defaults(ExperimentConfig config);

// Flat key=value config text with '#' comments; arrays comma-separated.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);

// Deterministic per-cell seed; re-running one cell reproduces its records.
std::uint64_t cell_seed(std::uint64_t config_seed, int grid_index, int rep);

// One (grid value, rep) cell of the sweep.
std::vector<SweepRecord> run_cell(const ExperimentConfig& config,
                                  int grid_index, int rep);

// Full sweep over the grid x reps pool; records come back in canonical
// order (grid index, method, rep, metric) regardless of scheduling.
std::vector<SweepRecord> run_sweep(const ExperimentConfig& config);

std::string records_to_csv(const std::vector<SweepRecord>& records);
std::string records_to_json(const std::vector<SweepRecord>& records);

// Runs the sweep, writes out_path in the chosen format, prints one
// summary line per grid point. Returns a process exit status.
int run_scenario(const ExperimentConfig& config, std::ostream& out,
                 std::ostream& err);

struct Aggregate {
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
};

Aggregate aggregate(std::vector<double> values);

}  // namespace pathnet
