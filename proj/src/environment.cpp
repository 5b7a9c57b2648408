#include "sagmec/environment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace sagmec {

namespace {
constexpr double kEventEps = 1e-12;

double clamp01(double x) { return std::min(1.0, std::max(0.0, x)); }

double overlap(double a0, double a1, double b0, double b1) {
  return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}
}  // namespace

TailChoice decode_tail(int sat, int arm, int n_sats, int n_clouds) {
  TailChoice c;
  if (arm < 0 || arm >= n_sats - 1 + n_clouds) throw std::out_of_range("decode_tail: arm out of range");
  if (arm < n_sats - 1) {
    c.target = TailTarget::isl_satellite;
    c.index = arm < sat ? arm : arm + 1;  // skip self
  } else {
    c.target = TailTarget::cloud;
    c.index = arm - (n_sats - 1);
  }
  return c;
}

int encode_tail(int sat, TailChoice choice, int n_sats) {
  if (choice.target == TailTarget::cloud) return n_sats - 1 + choice.index;
  if (choice.target == TailTarget::isl_satellite)
    return choice.index < sat ? choice.index : choice.index - 1;
  throw std::invalid_argument("encode_tail: no target");
}

double reward_energy(double total_energy_j) {
  if (total_energy_j <= 0) return 1e6;
  return std::min(1e6, 1.0 / total_energy_j);
}

double reward_latency(double total_latency_s) {
  if (total_latency_s <= 0) return 1e6;
  return std::min(1e6, 1.0 / total_latency_s);
}

Environment::Environment(Scenario scenario, Objective objective)
    : scenario_(std::move(scenario)), objective_(objective) {
  scenario_.validate();
  coverage_window_s_ = coverage_time(scenario_.geo);
}

int Environment::n_heads() const { return n_heads(scenario_.counts); }

std::vector<int> Environment::head_sizes() const {
  const Counts& c = scenario_.counts;
  std::vector<int> sizes;
  sizes.reserve(static_cast<size_t>(n_heads()));
  for (int m = 0; m < c.users; ++m) sizes.push_back(c.uavs);
  for (int n = 0; n < c.uavs; ++n) sizes.push_back(c.sats);
  for (int l = 0; l < c.sats; ++l) sizes.push_back(c.sats - 1 + c.clouds);
  return sizes;
}

int Environment::continuous_dim() const {
  const Counts& c = scenario_.counts;
  return 3 * c.uavs + 6 * c.users * c.tasks_per_user;
}

int Environment::observation_dim() const {
  const Counts& c = scenario_.counts;
  return c.users * c.uavs + c.sats + c.sats * c.clouds + 4 * c.users * c.tasks_per_user +
         3 * c.uavs + 2 * c.users + 1;
}

void Environment::place_nodes() {
  const Counts& c = scenario_.counts;
  const PlacementParams& p = scenario_.placement;
  std::uniform_real_distribution<double> area(0.0, p.user_area_m);

  state_.positions.user_xy_m.resize(static_cast<size_t>(c.users));
  for (auto& u : state_.positions.user_xy_m) {
    const double x = area(state_.rng), y = area(state_.rng);
    u = Eigen::Vector2d(x, y);
  }

  state_.positions.uav_xyz_m.resize(static_cast<size_t>(c.uavs));
  const double z0 = std::clamp(p.uav_init_height_m, scenario_.box.z_min, scenario_.box.z_max);
  for (auto& q : state_.positions.uav_xyz_m) {
    const double x = area(state_.rng), y = area(state_.rng);
    q = Eigen::Vector3d(std::clamp(x, scenario_.box.x_min, scenario_.box.x_max),
                        std::clamp(y, scenario_.box.y_min, scenario_.box.y_max), z0);
  }

  std::uniform_real_distribution<double> sat_gap(p.sat_spacing_min_m, p.sat_spacing_max_m);
  state_.positions.leo_along_track_offset_m.assign(static_cast<size_t>(c.sats), 0.0);
  for (int l = 1; l < c.sats; ++l)
    state_.positions.leo_along_track_offset_m[l] =
        state_.positions.leo_along_track_offset_m[l - 1] + sat_gap(state_.rng);

  std::uniform_real_distribution<double> cloud_gap(p.cloud_spacing_min_m, p.cloud_spacing_max_m);
  state_.positions.cloud_offset_m.assign(static_cast<size_t>(c.clouds), 0.0);
  double acc = 0;
  for (int k = 0; k < c.clouds; ++k) {
    acc += cloud_gap(state_.rng);
    state_.positions.cloud_offset_m[k] = acc;
  }
}

void Environment::resample_channels() {
  const Counts& c = scenario_.counts;
  state_.h_user_uav.resize(c.users, c.uavs);
  for (int m = 0; m < c.users; ++m)
    for (int n = 0; n < c.uavs; ++n) {
      const Eigen::Vector3d user3(state_.positions.user_xy_m[m].x(), state_.positions.user_xy_m[m].y(), 0.0);
      const double d = distance(user3, state_.positions.uav_xyz_m[n]);
      state_.h_user_uav(m, n) = rician_gain(d, scenario_.rf, state_.rng);
    }

  state_.h_uav_sat.resize(c.uavs, c.sats);
  for (int n = 0; n < c.uavs; ++n)
    for (int l = 0; l < c.sats; ++l) {
      const double along = state_.positions.leo_along_track_offset_m[l] +
                           scenario_.geo.orbital_speed_mps * state_.elapsed_s;
      const double d = uav_sat_distance(scenario_.geo, along);
      state_.h_uav_sat(n, l) = sat_gain_outdated(d, d / scenario_.geo.light_speed_mps, scenario_.rf, state_.rng);
    }

  state_.h_sat_cloud.resize(c.sats, c.clouds);
  for (int l = 0; l < c.sats; ++l)
    for (int k = 0; k < c.clouds; ++k) {
      const double d = std::hypot(scenario_.geo.orbit_height_m, state_.positions.cloud_offset_m[k]);
      state_.h_sat_cloud(l, k) =
          rician_gain(d, scenario_.rf, state_.rng, scenario_.rf.rician_factor_sat_cloud);
    }
  ++state_.rng_state_tag;
}

const EpisodeState& Environment::reset(std::uint64_t seed) {
  const Counts& c = scenario_.counts;
  state_ = EpisodeState{};
  state_.rng.seed(seed);

  place_nodes();

  state_.graphs.clear();
  for (int m = 0; m < c.users; ++m)
    state_.graphs.push_back(generate_dag(c.tasks_per_user, scenario_.tasks.size_min_bits,
                                         scenario_.tasks.size_max_bits, scenario_.tasks.cpu_cycles,
                                         scenario_.tasks.edge_prob, state_.rng, m));

  state_.tasks.assign(static_cast<size_t>(c.users),
                      std::vector<TaskRuntime>(static_cast<size_t>(c.tasks_per_user)));
  state_.completed.assign(static_cast<size_t>(c.users), {});
  state_.user_energy_j.assign(static_cast<size_t>(c.users), 0.0);
  state_.user_energy_committed_j.assign(static_cast<size_t>(c.users), 0.0);
  state_.user_latency_committed_s.assign(static_cast<size_t>(c.users), 0.0);
  state_.uav_flight_time_s.assign(static_cast<size_t>(c.uavs), 0.0);
  state_.uav_load_hz.assign(static_cast<size_t>(c.uavs), 0.0);
  state_.sat_load_hz.assign(static_cast<size_t>(c.sats), 0.0);
  state_.cloud_load_hz.assign(static_cast<size_t>(c.clouds), 0.0);
  state_.elapsed_s = 0;

  resample_channels();
  episode_done_ = false;
  return state_;
}

double Environment::sat_window_remaining_s(int sat) const {
  return remaining_service_time(state_.positions.leo_along_track_offset_m[sat], scenario_.geo,
                                state_.elapsed_s);
}

double Environment::cloud_window_remaining_s(int sat, int cloud) const {
  const double combined =
      state_.positions.leo_along_track_offset_m[sat] + state_.positions.cloud_offset_m[cloud];
  return remaining_service_time(combined, scenario_.geo, state_.elapsed_s);
}

std::vector<TaskRef> Environment::ready_unscheduled() const {
  std::vector<TaskRef> out;
  for (int m = 0; m < scenario_.counts.users; ++m) {
    for (TaskId id : ready_tasks(state_.graphs[m], state_.completed[m]))
      if (state_.tasks[m][id].status == TaskStatus::pending) out.push_back({m, id});
  }
  return out;
}

bool Environment::all_done() const {
  for (const auto& per_user : state_.tasks)
    for (const auto& t : per_user)
      if (t.status != TaskStatus::done) return false;
  return true;
}

double Environment::total_energy_j() const {
  double e = 0;
  for (double v : state_.user_energy_committed_j) e += v;
  return e;
}

double Environment::total_latency_s() const {
  double t = 0;
  for (double v : state_.user_latency_committed_s) t += v;
  return t;
}

LinkRates<double> Environment::link_rates(const Pairing& pairing, int user) const {
  const Counts& c = scenario_.counts;
  const int n = pairing.user_uav[user];
  const int l = pairing.uav_sat[n];
  const TailChoice tail = decode_tail(l, pairing.sat_tail[l], c.sats, c.clouds);

  LinkRates<double> r;
  r.light_speed_mps = scenario_.geo.light_speed_mps;

  const Eigen::ArrayXd user_gains = state_.h_user_uav.col(n).array().abs2();
  r.rate_user_uav = uplink_rate_user_uav(user, user_gains.matrix(), scenario_.rf);

  const Eigen::ArrayXd uav_gains = state_.h_uav_sat.col(l).array().abs2();
  r.rate_uav_sat = uplink_rate_uav_sat(n, uav_gains.matrix(), scenario_.rf);
  const double along =
      state_.positions.leo_along_track_offset_m[l] + scenario_.geo.orbital_speed_mps * state_.elapsed_s;
  r.dist_uav_sat_m = uav_sat_distance(scenario_.geo, along);

  if (tail.target == TailTarget::isl_satellite) {
    r.dist_isl_m = std::abs(state_.positions.leo_along_track_offset_m[l] -
                            state_.positions.leo_along_track_offset_m[tail.index]);
    r.rate_isl = isl_rate(r.dist_isl_m, scenario_.rf);
  } else if (tail.target == TailTarget::cloud) {
    r.dist_sat_cloud_m =
        std::hypot(scenario_.geo.orbit_height_m, state_.positions.cloud_offset_m[tail.index]);
    r.rate_sat_cloud = sat_cloud_rate(state_.h_sat_cloud(l, tail.index), scenario_.rf);
  }
  return r;
}

OffloadPlan Environment::plan_from_action(const HybridAction& action, bool* normalized,
                                          std::vector<TaskRef>* deferred) const {
  const Counts& c = scenario_.counts;
  OffloadPlan plan;
  plan.pairing = action.pairing;
  bool any_clip = false;

  struct Request {
    TaskRef ref;
    OffloadFractions<double> mu;
    CycleShares<double> shares{0, 0, 0, 0};
    TailChoice tail;
    int uav = -1, sat = -1;
    double req_uav = 0, req_sat = 0, req_tail = 0;
  };
  std::vector<Request> requests;
  std::vector<double> uav_req(static_cast<size_t>(c.uavs), 0.0);
  std::vector<double> sat_req(static_cast<size_t>(c.sats), 0.0);
  std::vector<double> cloud_req(static_cast<size_t>(c.clouds), 0.0);

  for (const TaskRef& ref : ready_unscheduled()) {
    const int base = 3 * c.uavs + 6 * (ref.user * c.tasks_per_user + ref.task);
    Request rq;
    rq.ref = ref;
    rq.mu.mu_user = clamp01(action.continuous[base + 0]);
    rq.mu.mu_uav = clamp01(action.continuous[base + 1]);
    rq.mu.mu_sat = clamp01(action.continuous[base + 2]);
    rq.shares = cycle_shares(rq.mu);
    rq.uav = plan.pairing.user_uav[ref.user];
    rq.sat = plan.pairing.uav_sat[rq.uav];
    rq.tail = decode_tail(rq.sat, plan.pairing.sat_tail[rq.sat], c.sats, c.clouds);

    if (rq.shares.uav > 0) {
      rq.req_uav = clamp01(action.continuous[base + 3]) * scenario_.compute.f_uav_max_hz;
      uav_req[rq.uav] += rq.req_uav;
    }
    if (rq.shares.sat > 0) {
      rq.req_sat = clamp01(action.continuous[base + 4]) * scenario_.compute.f_sat_max_hz;
      sat_req[rq.sat] += rq.req_sat;
    }
    if (rq.shares.tail > 0) {
      if (rq.tail.target == TailTarget::cloud) {
        rq.req_tail = clamp01(action.continuous[base + 5]) * scenario_.compute.f_cloud_max_hz;
        cloud_req[rq.tail.index] += rq.req_tail;
      } else {
        rq.req_tail = clamp01(action.continuous[base + 5]) * scenario_.compute.f_sat_max_hz;
        sat_req[rq.tail.index] += rq.req_tail;
      }
    }
    requests.push_back(rq);
  }

  // Over-cap requests are scaled into what the node has left, proportionally
  // across this round's tasks.
  auto factor = [&any_clip](double requested, double cap, double load) {
    const double free = std::max(0.0, cap - load);
    if (requested <= free || requested <= 0) return 1.0;
    any_clip = true;
    return free / requested;
  };
  std::vector<double> uav_factor(static_cast<size_t>(c.uavs));
  std::vector<double> sat_factor(static_cast<size_t>(c.sats));
  std::vector<double> cloud_factor(static_cast<size_t>(c.clouds));
  for (int n = 0; n < c.uavs; ++n)
    uav_factor[n] = factor(uav_req[n], scenario_.compute.f_uav_max_hz, state_.uav_load_hz[n]);
  for (int l = 0; l < c.sats; ++l)
    sat_factor[l] = factor(sat_req[l], scenario_.compute.f_sat_max_hz, state_.sat_load_hz[l]);
  for (int k = 0; k < c.clouds; ++k)
    cloud_factor[k] = factor(cloud_req[k], scenario_.compute.f_cloud_max_hz, state_.cloud_load_hz[k]);

  for (const Request& rq : requests) {
    ResourceAlloc<double> alloc;
    bool starved = false;
    if (rq.shares.uav > 0) {
      alloc.f_uav_hz = rq.req_uav * uav_factor[rq.uav];
      starved = starved || alloc.f_uav_hz <= 0;
    }
    if (rq.shares.sat > 0) {
      alloc.f_sat_hz = rq.req_sat * sat_factor[rq.sat];
      starved = starved || alloc.f_sat_hz <= 0;
    }
    if (rq.shares.tail > 0) {
      alloc.f_tail_hz = rq.req_tail * (rq.tail.target == TailTarget::cloud
                                           ? cloud_factor[rq.tail.index]
                                           : sat_factor[rq.tail.index]);
      starved = starved || alloc.f_tail_hz <= 0;
    }
    if (starved) {
      // A positive share with no cycles to claim waits for a later round.
      if (deferred) deferred->push_back(rq.ref);
      continue;
    }
    plan.tasks.push_back(rq.ref);
    plan.fractions.push_back(rq.mu);
    plan.allocs.push_back(alloc);
    plan.targets.push_back(rq.tail.target);
  }
  if (normalized) *normalized = any_clip;
  return plan;
}

FeasibilityReport Environment::feasibility_check(const OffloadPlan& plan) const {
  const Counts& c = scenario_.counts;
  FeasibilityReport rep;
  auto add = [&rep](const std::string& letter, double mag, const std::string& detail) {
    rep.violations.push_back({letter, mag, detail});
  };

  // (32b)-(32d): one-hot by construction; verify index ranges.
  if (static_cast<int>(plan.pairing.user_uav.size()) != c.users)
    add("32b", 0, "user pairing row count mismatch");
  if (static_cast<int>(plan.pairing.uav_sat.size()) != c.uavs)
    add("32c", 0, "UAV pairing row count mismatch");
  if (static_cast<int>(plan.pairing.sat_tail.size()) != c.sats)
    add("32d", 0, "satellite pairing row count mismatch");
  if (!rep.ok()) return rep;
  for (int m = 0; m < c.users; ++m)
    if (plan.pairing.user_uav[m] < 0 || plan.pairing.user_uav[m] >= c.uavs)
      add("32b", 0, "user " + std::to_string(m) + " UAV index out of range");
  for (int n = 0; n < c.uavs; ++n)
    if (plan.pairing.uav_sat[n] < 0 || plan.pairing.uav_sat[n] >= c.sats)
      add("32c", 0, "UAV " + std::to_string(n) + " satellite index out of range");
  for (int l = 0; l < c.sats; ++l)
    if (plan.pairing.sat_tail[l] < 0 || plan.pairing.sat_tail[l] >= c.sats - 1 + c.clouds)
      add("32d", 0, "satellite " + std::to_string(l) + " tail index out of range");
  if (!rep.ok()) return rep;

  // Per-task metrics; allocation sums per node.
  std::vector<double> uav_sum = state_.uav_load_hz;
  std::vector<double> sat_sum = state_.sat_load_hz;
  std::vector<double> cloud_sum = state_.cloud_load_hz;
  std::vector<double> user_latency = state_.user_latency_committed_s;
  std::vector<double> user_energy = state_.user_energy_committed_j;
  std::vector<std::uint8_t> uav_used(static_cast<size_t>(c.uavs), 0);

  for (size_t idx = 0; idx < plan.tasks.size(); ++idx) {
    const TaskRef& ref = plan.tasks[idx];
    const Task& task = state_.graphs[ref.user].task(ref.task);
    const OffloadFractions<double>& mu = plan.fractions[idx];
    const ResourceAlloc<double>& alloc = plan.allocs[idx];
    const CycleShares<double> shares = cycle_shares(mu);

    const int n = plan.pairing.user_uav[ref.user];
    const int l = plan.pairing.uav_sat[n];
    const TailChoice tail = decode_tail(l, plan.pairing.sat_tail[l], c.sats, c.clouds);
    if (shares.local < 1.0) uav_used[n] = 1;

    if (shares.uav > 0) {
      if (alloc.f_uav_hz <= 0) {
        add("32e", shares.uav * task.cpu_cycles, "no UAV cycles available for a positive share");
        continue;
      }
      uav_sum[n] += alloc.f_uav_hz;
    }
    if (shares.sat > 0) {
      if (alloc.f_sat_hz <= 0) {
        add("32f", shares.sat * task.cpu_cycles, "no satellite cycles available for a positive share");
        continue;
      }
      sat_sum[l] += alloc.f_sat_hz;
    }
    if (shares.tail > 0) {
      if (alloc.f_tail_hz <= 0) {
        add(tail.target == TailTarget::cloud ? "32g" : "32f", shares.tail * task.cpu_cycles,
            "no tail cycles available for a positive share");
        continue;
      }
      if (tail.target == TailTarget::cloud) {
        cloud_sum[tail.index] += alloc.f_tail_hz;
        if (cloud_window_remaining_s(l, tail.index) <= 0)
          add("32a", 0, "satellite " + std::to_string(l) + " can no longer reach cloud " +
                            std::to_string(tail.index));
      } else {
        sat_sum[tail.index] += alloc.f_tail_hz;
        if (sat_window_remaining_s(tail.index) <= 0)
          add("32a", 0, "ISL peer satellite " + std::to_string(tail.index) + " window expired");
      }
    }
    if (shares.local < 1.0 && sat_window_remaining_s(l) <= 0)
      add("32a", 0, "satellite " + std::to_string(l) + " window expired");

    try {
      const LinkRates<double> rates = link_rates(plan.pairing, ref.user);
      const TaskMetrics<double> metrics = task_metrics(
          task, mu, alloc, rates, scenario_.compute, plan.targets[idx], scenario_.rf.tx_power_user_w,
          scenario_.rf.tx_power_uav_w, scenario_.rf.tx_power_sat_w);
      user_latency[ref.user] += metrics.total_latency;
      user_energy[ref.user] += metrics.total_energy;
    } catch (const std::exception& e) {
      add("32e", 0, std::string("chain not evaluable: ") + e.what());
    }
  }

  const double cap_tol = 1e-9;
  for (int n = 0; n < c.uavs; ++n)
    if (uav_sum[n] > scenario_.compute.f_uav_max_hz * (1 + cap_tol))
      add("32e", uav_sum[n] - scenario_.compute.f_uav_max_hz, "UAV " + std::to_string(n));
  for (int l = 0; l < c.sats; ++l)
    if (sat_sum[l] > scenario_.compute.f_sat_max_hz * (1 + cap_tol))
      add("32f", sat_sum[l] - scenario_.compute.f_sat_max_hz, "satellite " + std::to_string(l));
  for (int k = 0; k < c.clouds; ++k)
    if (cloud_sum[k] > scenario_.compute.f_cloud_max_hz * (1 + cap_tol))
      add("32g", cloud_sum[k] - scenario_.compute.f_cloud_max_hz, "cloud " + std::to_string(k));

  // (32h) latency budget per user (P1 constraint set).
  for (int m = 0; m < c.users; ++m)
    if (user_latency[m] > scenario_.t_max_s)
      add("32h", user_latency[m] - scenario_.t_max_s, "user " + std::to_string(m));

  // (32i) flight box.
  for (int n = 0; n < c.uavs; ++n) {
    const Eigen::Vector3d& q = state_.positions.uav_xyz_m[n];
    if (q.x() < scenario_.box.x_min || q.x() > scenario_.box.x_max || q.y() < scenario_.box.y_min ||
        q.y() > scenario_.box.y_max || q.z() < scenario_.box.z_min || q.z() > scenario_.box.z_max)
      add("32i", 0, "UAV " + std::to_string(n) + " outside the flight box");
  }

  // (32a) UAV flight time within the paired satellite's remaining window.
  for (int n = 0; n < c.uavs; ++n) {
    if (!uav_used[n]) continue;
    const int l = plan.pairing.uav_sat[n];
    const double remaining = sat_window_remaining_s(l);
    if (state_.uav_flight_time_s[n] > remaining)
      add("32a", state_.uav_flight_time_s[n] - remaining, "UAV " + std::to_string(n) + " flight time");
  }

  // (33a) energy budget per user (P2 constraint set).
  for (int m = 0; m < c.users; ++m)
    if (user_energy[m] > scenario_.e_max_j)
      add("33a", user_energy[m] - scenario_.e_max_j, "user " + std::to_string(m));

  return rep;
}

void Environment::commit_plan(const OffloadPlan& plan, StepInfo& info) {
  const Counts& c = scenario_.counts;
  for (size_t idx = 0; idx < plan.tasks.size(); ++idx) {
    const TaskRef& ref = plan.tasks[idx];
    const Task& task = state_.graphs[ref.user].task(ref.task);
    const OffloadFractions<double>& mu = plan.fractions[idx];
    const ResourceAlloc<double>& alloc = plan.allocs[idx];
    const LinkRates<double> rates = link_rates(plan.pairing, ref.user);

    ScheduledTask sched;
    sched.metrics = task_metrics(task, mu, alloc, rates, scenario_.compute, plan.targets[idx],
                                 scenario_.rf.tx_power_user_w, scenario_.rf.tx_power_uav_w,
                                 scenario_.rf.tx_power_sat_w);
    sched.shares = cycle_shares(mu);
    sched.fractions = mu;
    sched.alloc = alloc;
    sched.start_s = state_.elapsed_s;
    sched.uav = plan.pairing.user_uav[ref.user];
    sched.sat = plan.pairing.uav_sat[sched.uav];
    const TailChoice tail = decode_tail(sched.sat, plan.pairing.sat_tail[sched.sat], c.sats, c.clouds);
    sched.tail_node = tail.index;
    sched.target = plan.targets[idx];

    const double t0 = sched.start_s;
    const TaskMetrics<double>& m = sched.metrics;
    sched.local_end = t0 + m.local_time;
    sched.uav_comp_begin = t0 + m.uav.tx_time;
    sched.uav_comp_end = sched.uav_comp_begin + m.uav.comp_time;
    sched.sat_comp_begin = t0 + m.uav.tx_time + m.sat.tx_time;
    sched.sat_comp_end = sched.sat_comp_begin + m.sat.comp_time;
    sched.tail_comp_begin = t0 + m.uav.tx_time + m.sat.tx_time + m.tail.tx_time;
    sched.tail_comp_end = sched.tail_comp_begin + m.tail.comp_time;
    sched.completion_s = t0 + m.total_latency;

    state_.tasks[ref.user][ref.task].status = TaskStatus::in_flight;
    state_.tasks[ref.user][ref.task].schedule = sched;

    state_.uav_load_hz[sched.uav] += alloc.f_uav_hz;
    state_.sat_load_hz[sched.sat] += alloc.f_sat_hz;
    if (sched.shares.tail > 0) {
      if (sched.target == TailTarget::cloud)
        state_.cloud_load_hz[sched.tail_node] += alloc.f_tail_hz;
      else if (sched.target == TailTarget::isl_satellite)
        state_.sat_load_hz[sched.tail_node] += alloc.f_tail_hz;
    }
    state_.user_latency_committed_s[ref.user] += m.total_latency;
    state_.user_energy_committed_j[ref.user] += m.total_energy;
    ++info.tasks_scheduled;
  }
  info.scheduled_round = !plan.tasks.empty();
}

double Environment::next_event_dt() const {
  double next = std::numeric_limits<double>::infinity();
  for (const auto& per_user : state_.tasks)
    for (const auto& t : per_user)
      if (t.status == TaskStatus::in_flight)
        next = std::min(next, t.schedule->completion_s);
  if (!std::isfinite(next)) return scenario_.slot_s;
  return std::max(next - state_.elapsed_s, 1e-9);
}

void Environment::advance_time(double dt, StepInfo& info) {
  const double t0 = state_.elapsed_s;
  const double t1 = t0 + dt;

  std::vector<std::uint8_t> uav_serving(state_.uav_load_hz.size(), 0);
  for (int m = 0; m < scenario_.counts.users; ++m) {
    for (auto& rt : state_.tasks[m]) {
      if (rt.status != TaskStatus::in_flight) continue;
      const ScheduledTask& s = *rt.schedule;
      const double span = s.completion_s - s.start_s;
      if (span > 0) {
        const double frac = overlap(t0, t1, s.start_s, s.completion_s) / span;
        if (frac > 0) {
          const double de = s.metrics.total_energy * frac;
          state_.user_energy_j[m] += de;
          info.step_energy_j += de;
        }
      }
      if (s.shares.local < 1.0) uav_serving[s.uav] = 1;
    }
  }
  for (size_t n = 0; n < uav_serving.size(); ++n)
    if (uav_serving[n]) state_.uav_flight_time_s[n] += dt;

  state_.elapsed_s = t1;

  // Completions at or before the new clock.
  for (int m = 0; m < scenario_.counts.users; ++m) {
    for (size_t i = 0; i < state_.tasks[m].size(); ++i) {
      TaskRuntime& rt = state_.tasks[m][i];
      if (rt.status != TaskStatus::in_flight) continue;
      const ScheduledTask& s = *rt.schedule;
      if (s.completion_s <= t1 + kEventEps) {
        rt.status = TaskStatus::done;
        state_.completed[m].insert(static_cast<TaskId>(i));
        state_.uav_load_hz[s.uav] -= s.alloc.f_uav_hz;
        state_.sat_load_hz[s.sat] -= s.alloc.f_sat_hz;
        if (s.shares.tail > 0) {
          if (s.target == TailTarget::cloud)
            state_.cloud_load_hz[s.tail_node] -= s.alloc.f_tail_hz;
          else if (s.target == TailTarget::isl_satellite)
            state_.sat_load_hz[s.tail_node] -= s.alloc.f_tail_hz;
        }
      }
    }
  }
  int done_count = 0;
  for (const auto& per_user : state_.tasks)
    for (const auto& t : per_user)
      if (t.status == TaskStatus::done) ++done_count;
  info.tasks_completed_total = done_count;
  info.dt_s = dt;
}

StepResult Environment::step(const HybridAction& action) {
  if (episode_done_) throw std::logic_error("Environment::step called on a finished episode");
  const Counts& c = scenario_.counts;
  StepResult res;

  if (action.continuous.size() != continuous_dim())
    throw std::invalid_argument("step: continuous action dimension mismatch");
  if (action.continuous.hasNaN()) throw std::invalid_argument("step: NaN in continuous action");
  if (static_cast<int>(action.pairing.user_uav.size()) != c.users ||
      static_cast<int>(action.pairing.uav_sat.size()) != c.uavs ||
      static_cast<int>(action.pairing.sat_tail.size()) != c.sats)
    throw std::invalid_argument("step: pairing dimension mismatch");

  // UAV motion: cap the displacement norm, then clamp into the flight box.
  for (int n = 0; n < c.uavs; ++n) {
    Eigen::Vector3d d = action.continuous.segment<3>(3 * n);
    const double norm = d.norm();
    if (norm > scenario_.uav_max_step_m && norm > 0) d *= scenario_.uav_max_step_m / norm;
    Eigen::Vector3d& q = state_.positions.uav_xyz_m[n];
    q += d;
    q.x() = std::clamp(q.x(), scenario_.box.x_min, scenario_.box.x_max);
    q.y() = std::clamp(q.y(), scenario_.box.y_min, scenario_.box.y_max);
    q.z() = std::clamp(q.z(), scenario_.box.z_min, scenario_.box.z_max);
  }

  // Scheduling round for every ready, still-pending task.
  bool normalized = false;
  std::vector<TaskRef> deferred;
  OffloadPlan plan = plan_from_action(action, &normalized, &deferred);
  res.info.normalized = normalized;
  res.info.tasks_deferred = static_cast<int>(deferred.size());

  if (!plan.tasks.empty()) {
    FeasibilityReport rep = feasibility_check(plan);
    std::vector<Violation> binding;
    for (const Violation& v : rep.violations) {
      const bool latency_letter = v.constraint == "32h";
      const bool energy_letter = v.constraint == "33a";
      if (objective_ == Objective::energy && energy_letter) continue;  // P1 has no energy budget
      if (objective_ == Objective::latency && latency_letter) continue;  // P2 has no latency budget
      binding.push_back(v);
    }
    if (!binding.empty()) {
      res.done = true;
      res.reward = 0;
      res.info.violations = binding;
      episode_done_ = true;
      return res;
    }
    commit_plan(plan, res.info);
  }

  // Advance the clock. Under fast_forward the step rolls through event
  // boundaries until the next decision point: new ready tasks, termination,
  // or episode end (the per-slot cadence only carries UAV motion).
  while (true) {
    double dt = scenario_.slot_s;
    const bool idle = ready_unscheduled().empty();
    if (scenario_.fast_forward && idle) dt = next_event_dt();
    advance_time(dt, res.info);

    // Coverage check: serving UAVs must stay within the paired satellite's
    // remaining window.
    for (int m = 0; m < c.users && res.info.violations.empty(); ++m) {
      for (const auto& rt : state_.tasks[m]) {
        if (rt.status != TaskStatus::in_flight) continue;
        const ScheduledTask& s = *rt.schedule;
        if (s.shares.local >= 1.0) continue;
        const double remaining = sat_window_remaining_s(s.sat);
        if (state_.uav_flight_time_s[s.uav] > remaining) {
          res.info.violations.push_back({"32a", state_.uav_flight_time_s[s.uav] - remaining,
                                         "UAV " + std::to_string(s.uav) + " flight time"});
          break;
        }
      }
    }
    if (!res.info.violations.empty()) {
      res.done = true;
      res.reward = 0;
      episode_done_ = true;
      return res;
    }

    if (all_done()) {
      res.done = true;
      const double objective_total =
          objective_ == Objective::energy ? total_energy_j() : total_latency_s();
      const double raw = objective_ == Objective::energy ? reward_energy(objective_total)
                                                         : reward_latency(objective_total);
      res.reward = scenario_.reward_scale * raw;
      episode_done_ = true;
      return res;
    }

    if (state_.elapsed_s / scenario_.slot_s >= scenario_.max_slots) {
      res.done = true;
      res.reward = 0;
      res.info.violations.push_back({"timeout", state_.elapsed_s, "slot budget exhausted"});
      episode_done_ = true;
      return res;
    }

    if (!scenario_.fast_forward || !ready_unscheduled().empty()) break;
    bool any_in_flight = false;
    for (const auto& per_user : state_.tasks)
      for (const auto& rt : per_user) any_in_flight = any_in_flight || rt.status == TaskStatus::in_flight;
    if (!any_in_flight) break;  // only deferred work left; hand control back
  }

  if (scenario_.dense_reward) {
    const double raw = objective_ == Objective::energy
                           ? reward_energy(res.info.step_energy_j)
                           : reward_latency(res.info.dt_s * std::max(1, res.info.tasks_scheduled));
    res.reward = scenario_.reward_scale * raw;
  }

  if (!scenario_.freeze_channels) resample_channels();
  return res;
}

ActionMask Environment::action_mask() const {
  const Counts& c = scenario_.counts;
  ActionMask mask;
  mask.discrete.reserve(static_cast<size_t>(n_heads()));

  for (int m = 0; m < c.users; ++m)
    mask.discrete.emplace_back(static_cast<size_t>(c.uavs), std::uint8_t{1});

  std::vector<std::uint8_t> sat_alive(static_cast<size_t>(c.sats));
  for (int l = 0; l < c.sats; ++l) sat_alive[l] = sat_window_remaining_s(l) > 0 ? 1 : 0;
  for (int n = 0; n < c.uavs; ++n) mask.discrete.emplace_back(sat_alive.begin(), sat_alive.end());

  for (int l = 0; l < c.sats; ++l) {
    std::vector<std::uint8_t> arms(static_cast<size_t>(c.sats - 1 + c.clouds), 0);
    for (int a = 0; a < c.sats - 1 + c.clouds; ++a) {
      const TailChoice t = decode_tail(l, a, c.sats, c.clouds);
      if (t.target == TailTarget::isl_satellite)
        arms[a] = sat_alive[t.index];
      else
        arms[a] = cloud_window_remaining_s(l, t.index) > 0 ? 1 : 0;
    }
    mask.discrete.push_back(std::move(arms));
  }

  const int dim = continuous_dim();
  mask.lo.resize(dim);
  mask.hi.resize(dim);
  for (int n = 0; n < c.uavs; ++n) {
    const Eigen::Vector3d& q = state_.positions.uav_xyz_m[n];
    const double cap = scenario_.uav_max_step_m;
    mask.lo[3 * n + 0] = std::max(-cap, scenario_.box.x_min - q.x());
    mask.hi[3 * n + 0] = std::min(cap, scenario_.box.x_max - q.x());
    mask.lo[3 * n + 1] = std::max(-cap, scenario_.box.y_min - q.y());
    mask.hi[3 * n + 1] = std::min(cap, scenario_.box.y_max - q.y());
    mask.lo[3 * n + 2] = std::max(-cap, scenario_.box.z_min - q.z());
    mask.hi[3 * n + 2] = std::min(cap, scenario_.box.z_max - q.z());
  }

  for (int m = 0; m < c.users; ++m) {
    for (int i = 0; i < c.tasks_per_user; ++i) {
      const int base = 3 * c.uavs + 6 * (m * c.tasks_per_user + i);
      const TaskRuntime& rt = state_.tasks[m][i];
      const bool open = rt.status == TaskStatus::pending;
      for (int d = 0; d < 6; ++d) {
        mask.lo[base + d] = 0;
        mask.hi[base + d] = open ? 1 : 0;
      }
    }
  }
  return mask;
}

Eigen::VectorXd Environment::observation() const {
  const Counts& c = scenario_.counts;
  Eigen::VectorXd obs(observation_dim());
  int at = 0;

  for (int m = 0; m < c.users; ++m)
    for (int n = 0; n < c.uavs; ++n)
      obs[at++] = (std::log10(std::norm(state_.h_user_uav(m, n)) + 1e-30) + 6.0) / 3.0;

  for (int l = 0; l < c.sats; ++l) obs[at++] = sat_window_remaining_s(l) / coverage_window_s_;
  for (int l = 0; l < c.sats; ++l)
    for (int k = 0; k < c.clouds; ++k) obs[at++] = cloud_window_remaining_s(l, k) / coverage_window_s_;

  for (int m = 0; m < c.users; ++m) {
    for (int i = 0; i < c.tasks_per_user; ++i) {
      const TaskRuntime& rt = state_.tasks[m][i];
      double fm = 1, fn = 1, fl = 1, fk = 1;
      if (rt.status == TaskStatus::done) {
        fm = fn = fl = fk = 0;
      } else if (rt.status == TaskStatus::in_flight) {
        const ScheduledTask& s = *rt.schedule;
        auto seg_left = [this](double share, double begin, double end) {
          if (share <= 0) return 0.0;
          if (end <= begin) return 0.0;
          const double f = (end - state_.elapsed_s) / (end - begin);
          return share * clamp01(f);
        };
        fm = seg_left(s.shares.local, s.start_s, s.local_end);
        fn = seg_left(s.shares.uav, s.uav_comp_begin, s.uav_comp_end);
        fl = seg_left(s.shares.sat, s.sat_comp_begin, s.sat_comp_end);
        fk = seg_left(s.shares.tail, s.tail_comp_begin, s.tail_comp_end);
      }
      obs[at++] = fm;
      obs[at++] = fn;
      obs[at++] = fl;
      obs[at++] = fk;
    }
  }

  for (int n = 0; n < c.uavs; ++n) {
    const Eigen::Vector3d& q = state_.positions.uav_xyz_m[n];
    obs[at++] = (q.x() - scenario_.box.x_min) / std::max(1e-9, scenario_.box.x_max - scenario_.box.x_min);
    obs[at++] = (q.y() - scenario_.box.y_min) / std::max(1e-9, scenario_.box.y_max - scenario_.box.y_min);
    obs[at++] = (q.z() - scenario_.box.z_min) / std::max(1e-9, scenario_.box.z_max - scenario_.box.z_min);
  }

  for (int m = 0; m < c.users; ++m) obs[at++] = state_.user_energy_j[m] / scenario_.e_max_j;
  for (int m = 0; m < c.users; ++m) obs[at++] = state_.user_latency_committed_s[m] / scenario_.t_max_s;
  obs[at++] = state_.elapsed_s / coverage_window_s_;
  return obs;
}

HybridAction Environment::from_canonical(const ActionMask& mask, const std::vector<int>& arms,
                                         const Eigen::VectorXd& u) const {
  const Counts& c = scenario_.counts;
  if (static_cast<int>(arms.size()) != n_heads())
    throw std::invalid_argument("from_canonical: arm count mismatch");
  if (u.size() != continuous_dim()) throw std::invalid_argument("from_canonical: dim mismatch");

  HybridAction a;
  a.pairing.user_uav.assign(arms.begin(), arms.begin() + c.users);
  a.pairing.uav_sat.assign(arms.begin() + c.users, arms.begin() + c.users + c.uavs);
  a.pairing.sat_tail.assign(arms.begin() + c.users + c.uavs, arms.end());
  a.continuous.resize(u.size());
  for (int d = 0; d < u.size(); ++d) {
    const double t = (std::clamp(u[d], -1.0, 1.0) + 1.0) / 2.0;
    a.continuous[d] = mask.lo[d] + t * (mask.hi[d] - mask.lo[d]);
  }
  return a;
}

std::string EpisodeState::serialize() const {
  std::ostringstream out;
  out << std::hexfloat;

  out << "users:";
  for (const auto& u : positions.user_xy_m) out << u.x() << "," << u.y() << ";";
  out << "uavs:";
  for (const auto& q : positions.uav_xyz_m) out << q.x() << "," << q.y() << "," << q.z() << ";";
  out << "sats:";
  for (double o : positions.leo_along_track_offset_m) out << o << ";";
  out << "clouds:";
  for (double o : positions.cloud_offset_m) out << o << ";";
  out << "t=" << elapsed_s << ";";
  out << "h_mn:";
  for (Eigen::Index i = 0; i < h_user_uav.size(); ++i)
    out << h_user_uav(i).real() << "," << h_user_uav(i).imag() << ";";
  out << "h_nl:";
  for (Eigen::Index i = 0; i < h_uav_sat.size(); ++i)
    out << h_uav_sat(i).real() << "," << h_uav_sat(i).imag() << ";";
  out << "h_lk:";
  for (Eigen::Index i = 0; i < h_sat_cloud.size(); ++i)
    out << h_sat_cloud(i).real() << "," << h_sat_cloud(i).imag() << ";";
  out << "energy:";
  for (double e : user_energy_j) out << e << ";";
  for (double e : user_energy_committed_j) out << e << ";";
  out << "latency:";
  for (double t : user_latency_committed_s) out << t << ";";
  out << "loads:";
  for (double f : uav_load_hz) out << f << ";";
  for (double f : sat_load_hz) out << f << ";";
  for (double f : cloud_load_hz) out << f << ";";
  out << "tasks:";
  for (const auto& per_user : tasks)
    for (const auto& rt : per_user) {
      out << static_cast<int>(rt.status);
      if (rt.schedule) {
        const ScheduledTask& s = *rt.schedule;
        out << "(" << s.start_s << "," << s.completion_s << "," << s.metrics.total_energy << ","
            << s.metrics.total_latency << ")";
      }
      out << ";";
    }
  out << "rng:" << rng;
  return out.str();
}

}  // namespace sagmec
