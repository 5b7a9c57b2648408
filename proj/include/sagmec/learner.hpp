#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sagmec/environment.hpp"
#include "sagmec/mpo.hpp"
#include "sagmec/replay.hpp"
#include "sagmec/sac.hpp"

namespace sagmec {

struct TrainParams {
  std::vector<int> hidden{128, 128};
  double lr = 3e-4;
  int batch = 256;
  int replay_capacity = 100000;
  double soft_update_rate = 5e-3;
  double alpha = 0.2;          // entropy temperature
  double discount = 0.99;      // tau
  double assist_share = 0.2;   // 1 assist : 4 env samples per batch
  bool assist_enabled = true;
  MpoParams mpo;
  int updates_per_episode = 1;
  int warmup_transitions = 256;
  int episodes = 1000;
  int eval_interval = 100;
  int eval_episodes = 1;
  int rollout_batch = 1;  // episodes collected per policy snapshot
  int threads = 1;
  bool fixed_instance = false;  // reuse scenario.seed for every episode
  std::uint64_t seed = 1;
  double policy_final_scale = 0.01;

  void validate() const;
};

/// Everything the optimizer owns: both SAC agents, the hybrid policy and its
/// snapshot, and the hyperparameters they were built with.
struct LearnerBundle {
  HeadLayout heads;
  int obs_dim = 0;
  int act_dim = 0;
  DiscreteAgent dis;
  ContinuousAgent con;
  HybridPolicy ell, ell_bar;
  TrainParams params;

  static LearnerBundle make(const Environment& env, const TrainParams& params);
};

struct EpisodeMetrics {
  int episode = 0;
  double reward = 0;
  double energy_j = 0;
  double latency_s = 0;
  int steps = 0;
  int violations = 0;
  bool completed = false;
  double loss_value_dis = 0, loss_q_dis = 0, loss_policy_dis = 0;
  double loss_value_con = 0, loss_q_con = 0, loss_policy_con = 0;
  double mpo_kl_discrete = 0, mpo_kl_continuous = 0;
  // Deterministic-policy evaluation, filled every eval_interval episodes.
  bool has_eval = false;
  double eval_reward = 0, eval_energy_j = 0, eval_latency_s = 0;
  bool eval_completed = false;
};

struct TrainResult {
  std::vector<EpisodeMetrics> metrics;
};

/// One deterministic (mode-action) episode; returns its metrics row.
EpisodeMetrics evaluate_policy(const Scenario& scenario, Objective objective,
                               const LearnerBundle& bundle, std::uint64_t seed);

/// DM-SAC-H training loop. Mutates `bundle` in place; `on_episode`, when set,
/// observes every metrics row as it is produced.
TrainResult train(const Scenario& scenario, Objective objective, LearnerBundle& bundle,
                  const std::function<void(const EpisodeMetrics&)>& on_episode = nullptr);

std::uint64_t episode_seed(std::uint64_t base, std::uint64_t episode);

const char* metrics_csv_header();
void write_metrics_row(std::ostream& out, const std::string& run_id, std::uint64_t seed,
                       const EpisodeMetrics& row);

}  // namespace sagmec
