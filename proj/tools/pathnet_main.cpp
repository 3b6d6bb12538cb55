// Experiment CLI: one subcommand per scenario, plus a generic `solve`
// subcommand that takes --scenario. Options layer over the config file.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pathnet/harness.hpp"

namespace {

struct CliOptions {
  std::string config_path;
  std::string scenario;
  std::string out_path;
  std::string format;
  std::string methods;
  std::string grid;
  std::uint64_t seed = 0;
  int reps = 0;
  int threads = 0;
  bool seed_set = false, reps_set = false, threads_set = false;
};

void add_common_options(CLI::App* cmd, CliOptions& opts) {
  cmd->add_option("--config", opts.config_path, "key=value config file");
  cmd->add_option("--seed", opts.seed, "root RNG seed")
      ->each([&](const std::string&) { opts.seed_set = true; });
  cmd->add_option("--reps", opts.reps, "repetitions per grid point")
      ->each([&](const std::string&) { opts.reps_set = true; });
  cmd->add_option("--out", opts.out_path, "output file path");
  cmd->add_option("--format", opts.format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--threads", opts.threads, "worker threads (overrides PATHNET_THREADS)")
      ->each([&](const std::string&) { opts.threads_set = true; });
  cmd->add_option("--methods", opts.methods, "comma-separated method subset");
  cmd->add_option("--grid", opts.grid, "comma-separated sweep values");
}

int run_with(const CliOptions& opts, const std::string& scenario_name) {
  try {
    pathnet::ExperimentConfig config;
    if (!opts.config_path.empty()) {
      config = pathnet::load_config_file(opts.config_path);
    }
    if (!scenario_name.empty()) {
      config.scenario = pathnet::scenario_from_string(scenario_name);
      config.mark_explicit("scenario");
    }
    if (opts.seed_set) {
      config.seed = opts.seed;
      config.mark_explicit("seed");
    }
    if (opts.reps_set) {
      config.reps = opts.reps;
      config.mark_explicit("reps");
    }
    if (opts.threads_set) {
      config.threads = opts.threads;
      config.mark_explicit("threads");
    }
    if (!opts.out_path.empty()) {
      config.out_path = opts.out_path;
      config.mark_explicit("out");
    }
    if (!opts.format.empty()) {
      config.format = opts.format == "json" ? pathnet::OutputFormat::kJson
                                            : pathnet::OutputFormat::kCsv;
      config.mark_explicit("format");
    }
    if (!opts.methods.empty()) {
      // Reuse the config-file parser for the list syntax.
      config = [&] {
        pathnet::ExperimentConfig merged = config;
        pathnet::ExperimentConfig parsed =
            pathnet::parse_config_text("methods=" + opts.methods);
        merged.methods = parsed.methods;
        merged.mark_explicit("methods");
        return merged;
      }();
    }
    if (!opts.grid.empty()) {
      pathnet::ExperimentConfig parsed =
          pathnet::parse_config_text("grid=" + opts.grid);
      config.grid = parsed.grid;
      config.grid_is_default = false;
      config.mark_explicit("grid");
    }
    return pathnet::run_scenario(config, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pathnet: multipath multitask linear representation experiments"};
  app.require_subcommand(1);

  std::vector<std::pair<CLI::App*, CliOptions>> scenario_commands;
  scenario_commands.reserve(16);
  for (const std::string& name : pathnet::scenario_names()) {
    scenario_commands.emplace_back(
        app.add_subcommand(name, "run the " + name + " sweep"), CliOptions{});
  }
  for (auto& [cmd, opts] : scenario_commands) {
    add_common_options(cmd, opts);
  }

  CliOptions solve_opts;
  CLI::App* solve = app.add_subcommand("solve", "run a sweep chosen by --scenario");
  solve->add_option("--scenario", solve_opts.scenario, "scenario name")
      ->check(CLI::IsMember(pathnet::scenario_names()));
  add_common_options(solve, solve_opts);

  CLI11_PARSE(app, argc, argv);

  for (auto& [cmd, opts] : scenario_commands) {
    if (cmd->parsed()) return run_with(opts, cmd->get_name());
  }
  if (solve->parsed()) {
    if (solve_opts.scenario.empty() && solve_opts.config_path.empty()) {
      std::cerr << "error: solve requires --scenario or a config file\n";
      return 2;
    }
    return run_with(solve_opts, solve_opts.scenario);
  }
  return 2;
}
