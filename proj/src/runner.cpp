#include "sagmec/runner.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "sagmec/baselines.hpp"
#include "sagmec/checkpoint.hpp"
#include "sagmec/report.hpp"

namespace fs = std::filesystem;

namespace sagmec {

namespace {

std::string to_hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double iqr(std::vector<double> v) {
  if (v.size() < 2) return 0;
  std::sort(v.begin(), v.end());
  auto quantile = [&](double q) {
    const double pos = q * (v.size() - 1);
    const size_t lo = static_cast<size_t>(pos);
    const double frac = pos - lo;
    return lo + 1 < v.size() ? v[lo] * (1 - frac) + v[lo + 1] * frac : v[lo];
  };
  return quantile(0.75) - quantile(0.25);
}

struct SummaryStats {
  std::vector<double> energies, latencies;
  int episodes = 0;
  int completed = 0;

  void add(double energy, double latency, bool done_all) {
    ++episodes;
    if (done_all) {
      ++completed;
      energies.push_back(energy);
      latencies.push_back(latency);
    }
  }
};

void write_summary(const fs::path& dir, const LoadedConfig& cfg, const std::string& run_id,
                   const std::string& policy, const SummaryStats& stats) {
  {
    std::ofstream kv(dir / "summary.kv");
    kv.precision(17);
    kv << "run_id=" << run_id << "\n";
    kv << "mode=" << cfg.run.mode << "\n";
    kv << "policy=" << policy << "\n";
    kv << "objective=" << to_string(cfg.run.objective) << "\n";
    kv << "users=" << cfg.scenario.counts.users << "\n";
    kv << "tasks_per_user=" << cfg.scenario.counts.tasks_per_user << "\n";
    kv << "seeds=" << cfg.run.seeds.size() << "\n";
    kv << "episodes=" << stats.episodes << "\n";
    kv << "completed=" << stats.completed << "\n";
    kv << "completed_rate="
       << (stats.episodes ? static_cast<double>(stats.completed) / stats.episodes : 0.0) << "\n";
    kv << "median_energy_j=" << median(stats.energies) << "\n";
    kv << "iqr_energy_j=" << iqr(stats.energies) << "\n";
    kv << "median_latency_s=" << median(stats.latencies) << "\n";
    kv << "iqr_latency_s=" << iqr(stats.latencies) << "\n";
    kv << "config_hash=" << to_hex(config_hash(cfg)) << "\n";
  }
  {
    std::ofstream txt(dir / "summary.txt");
    txt.precision(6);
    txt << "run " << run_id << "  mode=" << cfg.run.mode << "  policy=" << policy
        << "  objective=" << to_string(cfg.run.objective) << "\n";
    txt << "------------------------------------------------------------\n";
    txt << "episodes          " << stats.episodes << "\n";
    txt << "completed         " << stats.completed << "\n";
    txt << "median energy [J] " << median(stats.energies) << "\n";
    txt << "IQR energy [J]    " << iqr(stats.energies) << "\n";
    txt << "median latency [s]" << median(stats.latencies) << "\n";
    txt << "IQR latency [s]   " << iqr(stats.latencies) << "\n";
  }
}

EpisodeMetrics outcome_to_metrics(int episode, const EpisodeOutcome& out) {
  EpisodeMetrics row;
  row.episode = episode;
  row.reward = out.reward;
  row.energy_j = out.energy_j;
  row.latency_s = out.latency_s;
  row.steps = out.steps;
  row.violations = static_cast<int>(out.violations.size());
  row.completed = out.completed;
  return row;
}

void run_simulate(const LoadedConfig& cfg, const fs::path& dir, const std::string& run_id) {
  SummaryStats stats;
  for (std::uint64_t seed : cfg.run.seeds) {
    std::ofstream csv(dir / ("metrics_seed" + std::to_string(seed) + ".csv"));
    csv << "# sagmec metrics v1\n" << metrics_csv_header() << "\n";
    Environment env(cfg.scenario, cfg.run.objective);
    for (int ep = 0; ep < cfg.run.episodes; ++ep) {
      const std::uint64_t es = episode_seed(seed, static_cast<std::uint64_t>(ep));
      EpisodeOutcome out;
      if (cfg.run.policy == "random") {
        std::mt19937_64 rng(episode_seed(es, 0x5EED));
        out = play_episode(env, es, [&rng](const Environment& e) {
          return random_policy(e, e.action_mask(), rng);
        });
      } else if (cfg.run.policy == "local") {
        out = play_episode(env, es, [](const Environment& e) { return local_only_policy(e); });
      } else if (cfg.run.policy == "greedy") {
        out = play_episode(env, es,
                           [](const Environment& e) { return greedy_policy(e, e.action_mask()); });
      } else {
        throw std::runtime_error("simulate: policy '" + cfg.run.policy +
                                 "' needs a checkpoint; use the evaluate mode");
      }
      write_metrics_row(csv, run_id, seed, outcome_to_metrics(ep, out));
      stats.add(out.energy_j, out.latency_s, out.completed);
    }
  }
  write_summary(dir, cfg, run_id, cfg.run.policy, stats);
}

void run_train(const LoadedConfig& cfg, const fs::path& dir, const std::string& run_id) {
  SummaryStats stats;
  const std::uint64_t hash = config_hash(cfg);
  for (std::uint64_t seed : cfg.run.seeds) {
    LoadedConfig c = cfg;
    c.train.seed = seed;
    Environment env(c.scenario, c.run.objective);
    LearnerBundle bundle = LearnerBundle::make(env, c.train);

    std::ofstream csv(dir / ("metrics_seed" + std::to_string(seed) + ".csv"));
    csv << "# sagmec metrics v1\n" << metrics_csv_header() << "\n";
    train(c.scenario, c.run.objective, bundle, [&](const EpisodeMetrics& row) {
      write_metrics_row(csv, run_id, seed, row);
    });

    save_checkpoint((dir / ("ckpt_seed" + std::to_string(seed) + ".bin")).string(), bundle, hash);

    for (int k = 0; k < std::max(1, c.train.eval_episodes); ++k) {
      const std::uint64_t es = c.train.fixed_instance ? c.scenario.seed
                                                      : episode_seed(seed, 0xF17A1 + k);
      const EpisodeMetrics ev = evaluate_policy(c.scenario, c.run.objective, bundle, es);
      stats.add(ev.energy_j, ev.latency_s, ev.completed);
    }
  }
  write_summary(dir, cfg, run_id, "dmsach", stats);
}

void run_evaluate(const LoadedConfig& cfg, const fs::path& dir, const std::string& run_id) {
  if (cfg.run.checkpoint.empty())
    throw std::runtime_error("evaluate: --checkpoint is required");
  Environment env(cfg.scenario, cfg.run.objective);
  LearnerBundle bundle = LearnerBundle::make(env, cfg.train);
  load_checkpoint(cfg.run.checkpoint, bundle);

  SummaryStats stats;
  for (std::uint64_t seed : cfg.run.seeds) {
    std::ofstream csv(dir / ("metrics_seed" + std::to_string(seed) + ".csv"));
    csv << "# sagmec metrics v1\n" << metrics_csv_header() << "\n";
    for (int ep = 0; ep < cfg.run.episodes; ++ep) {
      EpisodeMetrics row = evaluate_policy(cfg.scenario, cfg.run.objective, bundle,
                                           episode_seed(seed, static_cast<std::uint64_t>(ep)));
      row.episode = ep;
      write_metrics_row(csv, run_id, seed, row);
      stats.add(row.energy_j, row.latency_s, row.completed);
    }
  }
  write_summary(dir, cfg, run_id, "dmsach", stats);
}

void run_oracle(const LoadedConfig& cfg, const fs::path& dir, const std::string& run_id) {
  Environment env(cfg.scenario, cfg.run.objective);
  env.reset(cfg.run.seeds.front());

  std::ofstream csv(dir / "oracle.csv");
  csv << "# sagmec oracle v1\nplan,objective,feasible\n";
  csv.precision(17);
  auto audit = [&csv, &env](const OraclePlanEval& row) {
    csv << "\"";
    const Pairing& p = row.plan.pairing;
    csv << "z=";
    for (size_t i = 0; i < p.user_uav.size(); ++i) csv << (i ? " " : "") << p.user_uav[i];
    csv << "|";
    for (size_t i = 0; i < p.uav_sat.size(); ++i) csv << (i ? " " : "") << p.uav_sat[i];
    csv << "|";
    for (size_t i = 0; i < p.sat_tail.size(); ++i) csv << (i ? " " : "") << p.sat_tail[i];
    csv << ";mu=";
    for (size_t i = 0; i < row.plan.fractions.size(); ++i)
      csv << (i ? " " : "") << row.plan.fractions[i].mu_user << "/" << row.plan.fractions[i].mu_uav
          << "/" << row.plan.fractions[i].mu_sat;
    csv << ";f=";
    for (size_t i = 0; i < row.plan.allocs.size(); ++i)
      csv << (i ? " " : "") << row.plan.allocs[i].f_uav_hz << "/" << row.plan.allocs[i].f_sat_hz
          << "/" << row.plan.allocs[i].f_tail_hz;
    (void)env;
    csv << "\"," << row.objective << "," << (row.feasible ? 1 : 0) << "\n";
  };

  const OracleResult res =
      brute_force(env, cfg.run.grid, cfg.run.objective, cfg.run.threads, audit);

  std::ofstream kv(dir / "summary.kv");
  kv.precision(17);
  kv << "run_id=" << run_id << "\n";
  kv << "mode=oracle\n";
  kv << "policy=oracle\n";
  kv << "objective=" << to_string(cfg.run.objective) << "\n";
  kv << "users=" << cfg.scenario.counts.users << "\n";
  kv << "seeds=1\n";
  kv << "evaluated=" << res.evaluated << "\n";
  kv << "feasible=" << res.feasible_count << "\n";
  kv << "best_objective=" << res.best_objective << "\n";
  kv << (cfg.run.objective == Objective::energy ? "median_energy_j=" : "median_latency_s=")
     << res.best_objective << "\n";
  kv << "config_hash=" << to_hex(config_hash(cfg)) << "\n";

  std::ofstream txt(dir / "summary.txt");
  txt.precision(9);
  txt << "oracle run " << run_id << "  objective=" << to_string(cfg.run.objective) << "\n";
  txt << "plans evaluated   " << res.evaluated << "\n";
  txt << "plans feasible    " << res.feasible_count << "\n";
  txt << "best objective    " << res.best_objective << "\n";
}

void run_sweep(const LoadedConfig& cfg, const fs::path& dir) {
  if (cfg.run.sweep_param.empty() || cfg.run.sweep_values.empty())
    throw std::runtime_error("sweep: run.sweep_param and run.sweep_values are required");

  std::vector<LoadedConfig> jobs;
  for (const std::string& value : cfg.run.sweep_values) {
    LoadedConfig c = cfg;
    c.run.mode = c.run.policy == "dmsach" ? "train" : "simulate";
    c.run.sweep_param.clear();
    c.run.sweep_values.clear();
    apply_override(c, cfg.run.sweep_param, value);
    c.run.out_dir = (dir / ("sweep_" + value)).string();
    jobs.push_back(std::move(c));
  }

  auto run_job = [](const LoadedConfig& job) { run(job); };
  if (cfg.run.threads > 1) {
    std::vector<std::thread> pool;
    for (const LoadedConfig& job : jobs) pool.emplace_back(run_job, std::cref(job));
    for (auto& t : pool) t.join();
  } else {
    for (const LoadedConfig& job : jobs) run_job(job);
  }
}

}  // namespace

std::string run_id_for(const LoadedConfig& cfg) { return to_hex(config_hash(cfg)); }

std::string output_root(const LoadedConfig& cfg) {
  if (const char* env_root = std::getenv("SAGMEC_OUT_ROOT"); env_root && *env_root)
    return env_root;
  return cfg.run.out_dir;
}

std::string run(const LoadedConfig& cfg) {
  const std::string run_id = run_id_for(cfg);
  const fs::path dir = fs::path(output_root(cfg)) / run_id;

  if (cfg.run.mode == "report") {
    fs::create_directories(dir);
    report(output_root(cfg), dir.string(), std::cout);
    return dir.string();
  }

  fs::create_directories(dir);
  write_config((dir / "config.cfg").string(), cfg);

  if (cfg.run.mode == "simulate")
    run_simulate(cfg, dir, run_id);
  else if (cfg.run.mode == "train")
    run_train(cfg, dir, run_id);
  else if (cfg.run.mode == "evaluate")
    run_evaluate(cfg, dir, run_id);
  else if (cfg.run.mode == "oracle")
    run_oracle(cfg, dir, run_id);
  else if (cfg.run.mode == "sweep")
    run_sweep(cfg, dir);
  else
    throw std::runtime_error("unknown run mode: " + cfg.run.mode);
  return dir.string();
}

}  // namespace sagmec
