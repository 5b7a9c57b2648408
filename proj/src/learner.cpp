#include "sagmec/learner.hpp"

#include <cmath>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace sagmec {

void TrainParams::validate() const {
  if (hidden.empty()) throw std::invalid_argument("train.hidden: need at least one hidden layer");
  for (int w : hidden)
    if (w <= 0) throw std::invalid_argument("train.hidden: widths must be positive");
  if (!(discount > 0) || discount > 1) throw std::invalid_argument("train.discount: must lie in (0,1]");
  if (!(lr > 0)) throw std::invalid_argument("train.lr: must be positive");
  if (batch <= 0) throw std::invalid_argument("train.batch: must be positive");
  if (replay_capacity <= batch) throw std::invalid_argument("train.replay_capacity: must exceed batch");
  if (!(mpo.chi_discrete > 0) || !(mpo.chi_continuous > 0))
    throw std::invalid_argument("train.mpo: KL thresholds must be positive");
  if (assist_share < 0 || assist_share >= 1)
    throw std::invalid_argument("train.assist_share: must lie in [0,1)");
}

std::uint64_t episode_seed(std::uint64_t base, std::uint64_t episode) {
  // splitmix64 over (base, episode)
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (episode + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

LearnerBundle LearnerBundle::make(const Environment& env, const TrainParams& params) {
  params.validate();
  LearnerBundle b;
  b.params = params;
  b.heads = HeadLayout::make(env.head_sizes());
  b.obs_dim = env.observation_dim();
  b.act_dim = env.continuous_dim();
  std::mt19937_64 rng(params.seed);
  b.dis = DiscreteAgent::make(b.obs_dim, b.heads, params.hidden, params.lr, rng,
                              params.policy_final_scale);
  b.con = ContinuousAgent::make(b.obs_dim, b.act_dim, params.hidden, params.lr, rng,
                                params.policy_final_scale);
  b.ell = HybridPolicy::make(b.obs_dim, b.heads, b.act_dim, params.hidden, params.mpo.fit_lr, rng,
                             params.policy_final_scale);
  b.ell_bar = b.ell;
  return b;
}

namespace {

struct RolloutOutput {
  std::vector<Transition> transitions;
  EpisodeMetrics metrics;
};

RolloutOutput run_episode(const Scenario& scenario, Objective objective, const LearnerBundle& bundle,
                          std::uint64_t env_seed, std::uint64_t policy_seed, bool deterministic,
                          bool collect) {
  RolloutOutput out;
  Environment env(scenario, objective);
  env.reset(env_seed);
  std::mt19937_64 policy_rng(policy_seed);

  double total_reward = 0;
  int steps = 0;
  int violations = 0;
  bool completed = false;

  Eigen::VectorXd obs = env.observation();
  while (true) {
    const ActionMask mask = env.action_mask();
    const HybridPolicy::Sample s =
        deterministic ? bundle.ell.mode(obs, mask.discrete)
                      : bundle.ell.sample(obs, mask.discrete, policy_rng,
                                          bundle.params.mpo.explore_log_std_floor);
    const HybridAction act = env.from_canonical(mask, s.arms, s.a);
    const StepResult res = env.step(act);
    const Eigen::VectorXd next_obs = env.observation();
    total_reward += res.reward;
    ++steps;
    violations += static_cast<int>(res.info.violations.size());

    if (collect) {
      Transition t;
      t.obs = obs;
      t.next_obs = next_obs;
      t.arms = s.arms;
      t.cont = s.a;
      t.reward = res.reward;
      t.done = res.done;
      t.mask = mask.discrete;
      out.transitions.push_back(std::move(t));
      if (bundle.params.assist_enabled)
        for (Transition& p :
             decision_assist_pairs(obs, mask.discrete, bundle.heads, bundle.act_dim))
          out.transitions.push_back(std::move(p));
    }

    if (res.done) {
      completed = env.all_done();
      break;
    }
    obs = next_obs;
  }

  out.metrics.reward = total_reward;
  out.metrics.energy_j = env.total_energy_j();
  out.metrics.latency_s = env.total_latency_s();
  out.metrics.steps = steps;
  out.metrics.violations = violations;
  out.metrics.completed = completed;
  return out;
}

struct UpdateLosses {
  double v_dis = 0, q_dis = 0, p_dis = 0;
  double v_con = 0, q_con = 0, p_con = 0;
  MpoDiagnostics mpo;
};

UpdateLosses update_once(LearnerBundle& b, ReplayStore& replay, std::mt19937_64& rng) {
  const TrainParams& hp = b.params;
  const double assist_share = hp.assist_enabled ? hp.assist_share : 0.0;
  const Batch batch = make_batch(replay.sample(hp.batch, assist_share));

  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd noise_v(batch.size(), b.act_dim), noise_p(batch.size(), b.act_dim);
  for (Eigen::Index i = 0; i < noise_v.size(); ++i) noise_v(i) = gauss(rng);
  for (Eigen::Index i = 0; i < noise_p.size(); ++i) noise_p(i) = gauss(rng);

  UpdateLosses out;

  LossResult r = discrete_value_loss(b.dis, batch, hp.alpha);
  out.v_dis = r.loss;
  adam_step(b.dis.value, b.dis.opt_value, r.grads);

  r = discrete_soft_q_loss(b.dis, batch, hp.discount);
  out.q_dis = r.loss;
  adam_step(b.dis.soft_q, b.dis.opt_q, r.grads);

  r = discrete_policy_loss(b.dis, batch, hp.alpha);
  out.p_dis = r.loss;
  adam_step(b.dis.policy, b.dis.opt_policy, r.grads);

  r = continuous_value_loss(b.con, batch, hp.alpha, noise_v);
  out.v_con = r.loss;
  adam_step(b.con.value, b.con.opt_value, r.grads);

  r = continuous_soft_q_loss(b.con, batch, hp.discount);
  out.q_con = r.loss;
  adam_step(b.con.soft_q, b.con.opt_q, r.grads);

  r = continuous_policy_loss(b.con, batch, hp.alpha, noise_p);
  out.p_con = r.loss;
  adam_step(b.con.policy, b.con.opt_policy, r.grads);

  soft_update(b.dis.target_value, b.dis.value, hp.soft_update_rate);
  soft_update(b.con.target_value, b.con.value, hp.soft_update_rate);

  out.mpo = mpo_combine(b.ell, b.ell_bar, b.dis, b.con, batch.obs, batch.masks, hp.mpo, rng);

  const double losses[] = {out.v_dis, out.q_dis, out.p_dis, out.v_con, out.q_con, out.p_con};
  for (double l : losses)
    if (!std::isfinite(l)) {
      std::ostringstream msg;
      msg << "training diverged: losses v/q/p dis=" << out.v_dis << "/" << out.q_dis << "/"
          << out.p_dis << " con=" << out.v_con << "/" << out.q_con << "/" << out.p_con;
      throw std::runtime_error(msg.str());
    }
  return out;
}

}  // namespace

EpisodeMetrics evaluate_policy(const Scenario& scenario, Objective objective,
                               const LearnerBundle& bundle, std::uint64_t seed) {
  return run_episode(scenario, objective, bundle, seed, seed, /*deterministic=*/true,
                     /*collect=*/false)
      .metrics;
}

TrainResult train(const Scenario& scenario, Objective objective, LearnerBundle& bundle,
                  const std::function<void(const EpisodeMetrics&)>& on_episode) {
  const TrainParams& hp = bundle.params;
  hp.validate();
  TrainResult result;
  if (hp.episodes <= 0) return result;

  ReplayStore replay(static_cast<std::size_t>(hp.replay_capacity), episode_seed(hp.seed, 0xA11CE));
  std::mt19937_64 update_rng(episode_seed(hp.seed, 0xB0B));

  const int rollout = std::max(1, hp.rollout_batch);
  int episode = 0;
  while (episode < hp.episodes) {
    const int n = std::min(rollout, hp.episodes - episode);
    std::vector<RolloutOutput> outs(static_cast<size_t>(n));

    auto run_range = [&](int first, int last) {
      for (int i = first; i < last; ++i) {
        const std::uint64_t es = hp.fixed_instance
                                     ? scenario.seed
                                     : episode_seed(hp.seed, static_cast<std::uint64_t>(episode + i));
        const std::uint64_t ps =
            episode_seed(episode_seed(hp.seed, static_cast<std::uint64_t>(episode + i)), 1);
        outs[static_cast<size_t>(i)] = run_episode(scenario, objective, bundle, es, ps, false, true);
      }
    };
    if (hp.threads > 1 && n > 1) {
      // Episode seeds are fixed up front, so the thread split cannot change
      // results; transitions are inserted in episode order below.
      std::vector<std::thread> pool;
      const int per = (n + hp.threads - 1) / hp.threads;
      for (int t = 0; t < hp.threads; ++t) {
        const int first = t * per, last = std::min(n, first + per);
        if (first >= last) break;
        pool.emplace_back(run_range, first, last);
      }
      for (auto& th : pool) th.join();
    } else {
      run_range(0, n);
    }

    for (int i = 0; i < n; ++i) {
      for (Transition& t : outs[static_cast<size_t>(i)].transitions) replay.push(std::move(t));

      EpisodeMetrics row = outs[static_cast<size_t>(i)].metrics;
      row.episode = episode + i;

      if (replay.env_size() >= static_cast<std::size_t>(std::max(hp.warmup_transitions, hp.batch))) {
        UpdateLosses losses{};
        for (int u = 0; u < hp.updates_per_episode; ++u) losses = update_once(bundle, replay, update_rng);
        row.loss_value_dis = losses.v_dis;
        row.loss_q_dis = losses.q_dis;
        row.loss_policy_dis = losses.p_dis;
        row.loss_value_con = losses.v_con;
        row.loss_q_con = losses.q_con;
        row.loss_policy_con = losses.p_con;
        row.mpo_kl_discrete = losses.mpo.kl_discrete;
        row.mpo_kl_continuous = losses.mpo.kl_continuous;
      }

      if (hp.eval_interval > 0 && (row.episode + 1) % hp.eval_interval == 0) {
        double er = 0, ee = 0, el = 0;
        bool all_completed = true;
        for (int k = 0; k < std::max(1, hp.eval_episodes); ++k) {
          const EpisodeMetrics ev = evaluate_policy(
              scenario, objective, bundle,
              hp.fixed_instance ? scenario.seed
                                : episode_seed(hp.seed, 0xE7A1000000ULL + static_cast<std::uint64_t>(k)));
          er += ev.reward;
          ee += ev.energy_j;
          el += ev.latency_s;
          all_completed = all_completed && ev.completed;
        }
        const int k = std::max(1, hp.eval_episodes);
        row.has_eval = true;
        row.eval_reward = er / k;
        row.eval_energy_j = ee / k;
        row.eval_latency_s = el / k;
        row.eval_completed = all_completed;
      }

      if (on_episode) on_episode(row);
      result.metrics.push_back(row);
    }
    episode += n;
  }
  return result;
}

const char* metrics_csv_header() {
  return "run_id,seed,episode,reward,energy_j,latency_s,steps,violations,completed,"
         "loss_value_dis,loss_q_dis,loss_policy_dis,loss_value_con,loss_q_con,loss_policy_con,"
         "mpo_kl_discrete,mpo_kl_continuous,has_eval,eval_reward,eval_energy_j,eval_latency_s,"
         "eval_completed";
}

void write_metrics_row(std::ostream& out, const std::string& run_id, std::uint64_t seed,
                       const EpisodeMetrics& r) {
  out.precision(17);
  out << run_id << "," << seed << "," << r.episode << "," << r.reward << "," << r.energy_j << ","
      << r.latency_s << "," << r.steps << "," << r.violations << "," << (r.completed ? 1 : 0) << ","
      << r.loss_value_dis << "," << r.loss_q_dis << "," << r.loss_policy_dis << ","
      << r.loss_value_con << "," << r.loss_q_con << "," << r.loss_policy_con << ","
      << r.mpo_kl_discrete << "," << r.mpo_kl_continuous << "," << (r.has_eval ? 1 : 0) << ","
      << r.eval_reward << "," << r.eval_energy_j << "," << r.eval_latency_s << ","
      << (r.eval_completed ? 1 : 0) << "\n";
}

}  // namespace sagmec
