#include "sagmec/baselines.hpp"

#include <cmath>
#include <limits>

#include "sagmec/distributions.hpp"

namespace sagmec {

namespace {

Pairing first_available_pairing(const Environment& env, const ActionMask& mask) {
  const Counts& c = env.scenario().counts;
  Pairing p;
  auto pick_first = [&mask](int head) {
    const auto& arms = mask.discrete[static_cast<size_t>(head)];
    for (size_t j = 0; j < arms.size(); ++j)
      if (arms[j]) return static_cast<int>(j);
    return 0;
  };
  int head = 0;
  for (int m = 0; m < c.users; ++m) p.user_uav.push_back(pick_first(head++));
  for (int n = 0; n < c.uavs; ++n) p.uav_sat.push_back(pick_first(head++));
  for (int l = 0; l < c.sats; ++l) p.sat_tail.push_back(pick_first(head++));
  return p;
}

}  // namespace

HybridAction random_policy(const Environment& env, const ActionMask& mask, std::mt19937_64& rng) {
  const Counts& c = env.scenario().counts;
  HybridAction a;
  std::uniform_real_distribution<double> uni(0.0, 1.0);

  auto pick_uniform = [&](int head) {
    const auto& arms = mask.discrete[static_cast<size_t>(head)];
    int n_avail = 0;
    for (auto b : arms) n_avail += b ? 1 : 0;
    if (n_avail == 0) return 0;
    int target = static_cast<int>(uni(rng) * n_avail);
    if (target >= n_avail) target = n_avail - 1;
    for (size_t j = 0; j < arms.size(); ++j) {
      if (!arms[j]) continue;
      if (target-- == 0) return static_cast<int>(j);
    }
    return 0;
  };
  int head = 0;
  for (int m = 0; m < c.users; ++m) a.pairing.user_uav.push_back(pick_uniform(head++));
  for (int n = 0; n < c.uavs; ++n) a.pairing.uav_sat.push_back(pick_uniform(head++));
  for (int l = 0; l < c.sats; ++l) a.pairing.sat_tail.push_back(pick_uniform(head++));

  a.continuous.resize(mask.lo.size());
  for (Eigen::Index d = 0; d < a.continuous.size(); ++d)
    a.continuous[d] = mask.lo[d] + uni(rng) * (mask.hi[d] - mask.lo[d]);
  return a;
}

HybridAction local_only_policy(const Environment& env) {
  const ActionMask mask = env.action_mask();
  HybridAction a;
  a.pairing = first_available_pairing(env, mask);
  a.continuous = Eigen::VectorXd::Zero(env.continuous_dim());
  const Counts& c = env.scenario().counts;
  for (int m = 0; m < c.users; ++m)
    for (int i = 0; i < c.tasks_per_user; ++i)
      a.continuous[3 * c.uavs + 6 * (m * c.tasks_per_user + i)] = 1.0;  // mu_user
  return a;
}

HybridAction greedy_policy(const Environment& env, const ActionMask& mask) {
  const Counts& c = env.scenario().counts;
  const Scenario& sc = env.scenario();
  HybridAction a;
  a.continuous = Eigen::VectorXd::Zero(env.continuous_dim());

  // Pairing: users pick the UAV with the strongest own gain; UAVs pick the
  // satellite with the longest remaining window; satellites default to the
  // cheapest tail by window length.
  const Eigen::MatrixXcd& h = env.state().h_user_uav;
  for (int m = 0; m < c.users; ++m) {
    int best = 0;
    double best_gain = -1;
    for (int n = 0; n < c.uavs; ++n) {
      const double g = std::norm(h(m, n));
      if (g > best_gain) {
        best_gain = g;
        best = n;
      }
    }
    a.pairing.user_uav.push_back(best);
  }
  for (int n = 0; n < c.uavs; ++n) {
    int best = 0;
    double best_window = -1;
    for (int l = 0; l < c.sats; ++l) {
      if (!mask.discrete[static_cast<size_t>(c.users + n)][static_cast<size_t>(l)]) continue;
      const double w = env.sat_window_remaining_s(l);
      if (w > best_window) {
        best_window = w;
        best = l;
      }
    }
    a.pairing.uav_sat.push_back(best);
  }
  for (int l = 0; l < c.sats; ++l) {
    const int head = c.users + c.uavs + l;
    int best = 0;
    double best_window = -1;
    for (int arm = 0; arm < c.sats - 1 + c.clouds; ++arm) {
      if (!mask.discrete[static_cast<size_t>(head)][static_cast<size_t>(arm)]) continue;
      const TailChoice t = decode_tail(l, arm, c.sats, c.clouds);
      const double w = t.target == TailTarget::cloud ? env.cloud_window_remaining_s(l, t.index)
                                                     : env.sat_window_remaining_s(t.index);
      if (w > best_window) {
        best_window = w;
        best = arm;
      }
    }
    a.pairing.sat_tail.push_back(best);
  }

  // Per ready task, grid search the fraction triple and allocation level with
  // the best one-step objective, honoring per-node capacity left.
  const std::vector<TaskRef> ready = env.ready_unscheduled();
  std::vector<int> tasks_at_uav(static_cast<size_t>(c.uavs), 0);
  for (const TaskRef& ref : ready) ++tasks_at_uav[static_cast<size_t>(a.pairing.user_uav[ref.user])];

  const double mu_grid[] = {0.0, 0.5, 1.0};
  const double level_grid[] = {0.25, 0.5, 1.0};
  for (const TaskRef& ref : ready) {
    const Task& task = env.state().graphs[ref.user].task(ref.task);
    const LinkRates<double> rates = env.link_rates(a.pairing, ref.user);
    const int uav = a.pairing.user_uav[ref.user];
    const int sat = a.pairing.uav_sat[uav];
    const TailChoice tail = decode_tail(sat, a.pairing.sat_tail[sat], c.sats, c.clouds);
    const int share_count = std::max(1, tasks_at_uav[static_cast<size_t>(uav)]);

    double best_cost = std::numeric_limits<double>::infinity();
    OffloadFractions<double> best_mu;
    double best_phi[3] = {0, 0, 0};
    for (double mu_m : mu_grid)
      for (double mu_n : mu_grid)
        for (double mu_l : mu_grid)
          for (double lvl : level_grid) {
            OffloadFractions<double> mu{mu_m, mu_n, mu_l};
            const CycleShares<double> shares = cycle_shares(mu);
            ResourceAlloc<double> alloc;
            const double phi = lvl / share_count;
            if (shares.uav > 0) alloc.f_uav_hz = phi * sc.compute.f_uav_max_hz;
            if (shares.sat > 0) alloc.f_sat_hz = phi * sc.compute.f_sat_max_hz;
            if (shares.tail > 0)
              alloc.f_tail_hz = phi * (tail.target == TailTarget::cloud ? sc.compute.f_cloud_max_hz
                                                                        : sc.compute.f_sat_max_hz);
            TaskMetrics<double> metrics;
            try {
              metrics = task_metrics(task, mu, alloc, rates, sc.compute, tail.target,
                                     sc.rf.tx_power_user_w, sc.rf.tx_power_uav_w, sc.rf.tx_power_sat_w);
            } catch (const std::exception&) {
              continue;
            }
            const double slack = sc.t_max_s / std::max(1, c.tasks_per_user);
            if (metrics.total_latency > slack) continue;
            const double cost = env.objective() == Objective::energy ? metrics.total_energy
                                                                     : metrics.total_latency;
            if (cost < best_cost) {
              best_cost = cost;
              best_mu = mu;
              best_phi[0] = shares.uav > 0 ? phi : 0;
              best_phi[1] = shares.sat > 0 ? phi : 0;
              best_phi[2] = shares.tail > 0 ? phi : 0;
            }
          }
    if (!std::isfinite(best_cost)) {
      // No grid point fits the per-task slack: fall back to the fastest chain.
      best_mu = OffloadFractions<double>{0.0, 1.0, 0.0};
      best_phi[0] = 1.0 / share_count;
      best_phi[1] = best_phi[2] = 0;
    }
    const int base = 3 * c.uavs + 6 * (ref.user * c.tasks_per_user + ref.task);
    a.continuous[base + 0] = best_mu.mu_user;
    a.continuous[base + 1] = best_mu.mu_uav;
    a.continuous[base + 2] = best_mu.mu_sat;
    a.continuous[base + 3] = best_phi[0];
    a.continuous[base + 4] = best_phi[1];
    a.continuous[base + 5] = best_phi[2];
  }
  return a;
}

}  // namespace sagmec
