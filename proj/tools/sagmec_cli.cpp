#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "sagmec/report.hpp"
#include "sagmec/runner.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::vector<std::uint64_t> seeds;
  int episodes = -1;
  std::string objective;
  std::string out;
  int threads = 0;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "scenario/run configuration file");
  cmd->add_option("--seed", flags.seeds, "random seed(s)");
  cmd->add_option("--episodes", flags.episodes, "episode budget");
  cmd->add_option("--objective", flags.objective, "energy (P1) or latency (P2)");
  cmd->add_option("--out", flags.out, "output directory root");
  cmd->add_option("--threads", flags.threads, "worker threads");
}

sagmec::LoadedConfig build_config(const CommonFlags& flags, const std::string& mode) {
  sagmec::LoadedConfig cfg =
      flags.config_path.empty() ? sagmec::config_defaults() : sagmec::load_config(flags.config_path);
  cfg.run.mode = mode;
  if (!flags.seeds.empty()) cfg.run.seeds = flags.seeds;
  if (flags.episodes >= 0) {
    cfg.run.episodes = flags.episodes;
    cfg.train.episodes = flags.episodes;
  }
  if (!flags.objective.empty()) sagmec::apply_override(cfg, "run.objective", flags.objective);
  if (!flags.out.empty()) cfg.run.out_dir = flags.out;
  if (flags.threads > 0) {
    cfg.run.threads = flags.threads;
    cfg.train.threads = flags.threads;
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sagmec: space-air-ground MEC offloading lab"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string policy = "local";
  std::string checkpoint;
  std::string sweep_param;
  std::vector<std::string> sweep_values;
  std::string report_dir;

  CLI::App* simulate = app.add_subcommand("simulate", "run a baseline policy on the scenario");
  add_common(simulate, flags);
  simulate->add_option("--policy", policy, "random | local | greedy");

  CLI::App* train = app.add_subcommand("train", "train the DM-SAC-H optimizer");
  add_common(train, flags);

  CLI::App* evaluate = app.add_subcommand("evaluate", "evaluate a trained checkpoint");
  add_common(evaluate, flags);
  evaluate->add_option("--checkpoint", checkpoint, "checkpoint file")->required();

  CLI::App* oracle = app.add_subcommand("oracle", "exhaustive brute-force reference on a small instance");
  add_common(oracle, flags);

  CLI::App* sweep = app.add_subcommand("sweep", "run one config key over several values");
  add_common(sweep, flags);
  sweep->add_option("--policy", policy, "policy to sweep");
  sweep->add_option("--param", sweep_param, "dotted config key")->required();
  sweep->add_option("--values", sweep_values, "comma-or-space separated values")->required();

  CLI::App* report = app.add_subcommand("report", "aggregate run summaries into a comparison table");
  add_common(report, flags);
  report->add_option("dir", report_dir, "directory of runs (defaults to --out)");

  CLI11_PARSE(app, argc, argv);

  try {
    const std::string mode = app.get_subcommands().front()->get_name();
    sagmec::LoadedConfig cfg = build_config(flags, mode);
    if (mode == "simulate" || mode == "sweep") cfg.run.policy = policy;
    if (mode == "evaluate") cfg.run.checkpoint = checkpoint;
    if (mode == "sweep") {
      cfg.run.sweep_param = sweep_param;
      cfg.run.sweep_values = sweep_values;
    }
    if (mode == "report") {
      const std::string root = report_dir.empty() ? sagmec::output_root(cfg) : report_dir;
      sagmec::report(root, (std::filesystem::path(root) / "report").string(), std::cout);
      return 0;
    }
    const std::string dir = sagmec::run(cfg);
    std::cout << "run artifacts: " << dir << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
