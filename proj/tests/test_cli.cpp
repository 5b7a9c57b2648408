// End-to-end checks of the command-line tool, driven through std::system.
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int failures = 0;

void check(bool ok, const std::string& what) {
  std::printf("%s: %s\n", ok ? "ok" : "FAIL", what.c_str());
  if (!ok) ++failures;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SAGMEC_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

fs::path find_file(const fs::path& root, const std::string& name) {
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file() && e.path().filename() == name) return e.path();
  return {};
}

}  // namespace

int main() {
  const fs::path work = fs::temp_directory_path() / "sagmec_cli_test";
  fs::remove_all(work);
  fs::create_directories(work);

  const fs::path cfg = work / "one_user.cfg";
  {
    std::ofstream f(cfg);
    f << "scenario.counts.users = 1\n"
         "scenario.counts.uavs = 1\n"
         "scenario.counts.sats = 1\n"
         "scenario.counts.clouds = 1\n"
         "scenario.counts.tasks_per_user = 10\n"
         "scenario.tasks.edge_prob = 0\n"
         "scenario.thresholds.t_max_s = 300\n"
         "env.fast_forward = true\n";
  }

  // simulate: local-only on the 1-user scenario shows 30 J for 10 tasks
  const fs::path sim_out = work / "sim";
  check(run_cli("simulate --config " + cfg.string() + " --policy local --episodes 3 --seed 5 --out " +
                sim_out.string()) == 0,
        "simulate exits 0");
  const fs::path kv = find_file(sim_out, "summary.kv");
  check(!kv.empty(), "simulate writes summary.kv");
  const std::string summary = slurp(kv);
  double median_energy = 0;
  if (const auto at = summary.find("median_energy_j="); at != std::string::npos)
    median_energy = std::stod(summary.substr(at + 16));
  check(std::abs(median_energy - 30.0) < 1e-9, "local-only energy is 30 J");
  check(!find_file(sim_out, "summary.txt").empty(), "simulate writes the text summary");
  check(!find_file(sim_out, "config.cfg").empty(), "simulate writes the canonical config");

  // determinism: identical config+seed reproduces the metrics CSV bitwise
  const fs::path sim_out2 = work / "sim2";
  run_cli("simulate --config " + cfg.string() + " --policy local --episodes 3 --seed 5 --out " +
          sim_out2.string());
  const fs::path csv1 = find_file(sim_out, "metrics_seed5.csv");
  const fs::path csv2 = find_file(sim_out2, "metrics_seed5.csv");
  check(!csv1.empty() && !csv2.empty() && slurp(csv1) == slurp(csv2),
        "rerun reproduces metrics bitwise");

  // evaluate on a missing checkpoint: nonzero exit
  check(run_cli("evaluate --config " + cfg.string() + " --checkpoint " +
                (work / "missing.bin").string() + " --episodes 1 --out " + (work / "eval").string()) != 0,
        "evaluate with a missing checkpoint fails");

  // bad config: nonzero exit
  const fs::path bad = work / "bad.cfg";
  {
    std::ofstream f(bad);
    f << "scenario.counts.users = 0\n";
  }
  check(run_cli("simulate --config " + bad.string() + " --out " + (work / "x").string()) != 0,
        "invalid config fails");

  // sweep over the user count emits one metrics file per value
  const fs::path sweep_out = work / "sweep";
  const fs::path sweep_cfg = work / "sweep.cfg";
  {
    std::ofstream f(sweep_cfg);
    f << "scenario.counts.users = 1\n"
         "scenario.counts.tasks_per_user = 1\n"
         "scenario.tasks.edge_prob = 0\n"
         "env.fast_forward = true\n"
         "scenario.thresholds.t_max_s = 300\n";
  }
  check(run_cli("sweep --config " + sweep_cfg.string() + " --policy local --episodes 2 " +
                "--param scenario.counts.users --values 1 2 3 --out " + sweep_out.string() +
                " --threads 2") == 0,
        "sweep exits 0");
  int metric_files = 0;
  for (const auto& e : fs::recursive_directory_iterator(sweep_out))
    if (e.is_regular_file() && e.path().filename().string().rfind("metrics_", 0) == 0) ++metric_files;
  check(metric_files == 3, "sweep emits 3 metric files");

  // report aggregates the sweep into a table and plot series
  check(run_cli("report " + sweep_out.string()) == 0, "report exits 0");
  check(!find_file(sweep_out / "report", "energy_vs_users.csv").empty(),
        "report writes the energy series");
  check(!find_file(sweep_out / "report", "latency_vs_users.csv").empty(),
        "report writes the latency series");
  check(!find_file(sweep_out / "report", "table.txt").empty(), "report writes the table");

  // oracle mode on a tiny instance
  const fs::path ocfg = work / "oracle.cfg";
  {
    std::ofstream f(ocfg);
    f << "scenario.counts.users = 1\n"
         "scenario.counts.uavs = 1\n"
         "scenario.counts.sats = 1\n"
         "scenario.counts.clouds = 1\n"
         "scenario.counts.tasks_per_user = 1\n"
         "scenario.tasks.edge_prob = 0\n"
         "env.freeze_channels = true\n"
         "env.fast_forward = true\n"
         "run.grid.mu_step = 0.5\n"
         "run.grid.alloc_levels = 2\n";
  }
  const fs::path oracle_out = work / "oracle";
  check(run_cli("oracle --config " + ocfg.string() + " --seed 1 --out " + oracle_out.string()) == 0,
        "oracle exits 0");
  const fs::path ocsv = find_file(oracle_out, "oracle.csv");
  check(!ocsv.empty(), "oracle writes the audit CSV");
  if (!ocsv.empty()) {
    const std::string text = slurp(ocsv);
    int rows = 0;
    for (char ch : text) rows += ch == '\n' ? 1 : 0;
    check(rows == 27 * 8 + 2, "oracle audit has one row per plan");
  }

  // train smoke: a few episodes end to end, checkpoint + evaluate round trip
  const fs::path tcfg = work / "train.cfg";
  {
    std::ofstream f(tcfg);
    f << "scenario.counts.users = 1\n"
         "scenario.counts.uavs = 1\n"
         "scenario.counts.sats = 1\n"
         "scenario.counts.clouds = 1\n"
         "scenario.counts.tasks_per_user = 1\n"
         "scenario.tasks.edge_prob = 0\n"
         "scenario.thresholds.t_max_s = 300\n"
         "env.freeze_channels = true\n"
         "env.fast_forward = true\n"
         "train.hidden = 16,16\n"
         "train.batch = 16\n"
         "train.warmup_transitions = 8\n"
         "train.replay_capacity = 1000\n"
         "train.eval_interval = 0\n"
         "train.mpo.candidates = 4\n"
         "train.mpo.fit_steps = 2\n";
  }
  const fs::path train_out = work / "train";
  check(run_cli("train --config " + tcfg.string() + " --episodes 30 --seed 3 --out " +
                train_out.string()) == 0,
        "train exits 0");
  const fs::path ckpt = find_file(train_out, "ckpt_seed3.bin");
  check(!ckpt.empty(), "train writes a checkpoint");
  if (!ckpt.empty())
    check(run_cli("evaluate --config " + tcfg.string() + " --checkpoint " + ckpt.string() +
                  " --episodes 2 --seed 4 --out " + (work / "eval2").string()) == 0,
          "evaluate on the trained checkpoint exits 0");

  std::printf("%s\n", failures == 0 ? "ALL CLI TESTS PASSED" : "CLI TESTS FAILED");
  return failures == 0 ? 0 : 1;
}
