#include "sagmec/oracle.hpp"

#include <cmath>
#include <thread>

namespace sagmec {

void GridSpec::validate() const {
  if (!(mu_step > 0) || mu_step > 1) throw std::invalid_argument("GridSpec: mu_step must lie in (0,1]");
  const double k = std::round(1.0 / mu_step);
  if (std::abs(k * mu_step - 1.0) > 1e-9)
    throw std::invalid_argument("GridSpec: mu_step must divide 1 evenly");
  if (alloc_levels < 1) throw std::invalid_argument("GridSpec: need at least one allocation level");
  if (max_plans == 0) throw std::invalid_argument("GridSpec: max_plans must be positive");
}

int GridSpec::mu_values() const { return static_cast<int>(std::round(1.0 / mu_step)) + 1; }

std::vector<Violation> binding_violations(const FeasibilityReport& report, Objective objective) {
  std::vector<Violation> binding;
  for (const Violation& v : report.violations) {
    if (objective == Objective::energy && v.constraint == "33a") continue;
    if (objective == Objective::latency && v.constraint == "32h") continue;
    binding.push_back(v);
  }
  return binding;
}

namespace {

struct ChainNodes {
  int uav, sat;
  TailChoice tail;
};

ChainNodes chain_nodes(const Pairing& pairing, int user, const Counts& c) {
  const int n = pairing.user_uav[user];
  const int l = pairing.uav_sat[n];
  return {n, l, decode_tail(l, pairing.sat_tail[l], c.sats, c.clouds)};
}

// Number of round tasks whose chain can place cycles on each node, used to
// size the per-task fair share.
struct NodeCounts {
  std::vector<int> uav, sat, cloud;
};

NodeCounts count_tasks(const Pairing& pairing, const std::vector<TaskRef>& tasks, const Counts& c) {
  NodeCounts nc{std::vector<int>(static_cast<size_t>(c.uavs), 0),
                std::vector<int>(static_cast<size_t>(c.sats), 0),
                std::vector<int>(static_cast<size_t>(c.clouds), 0)};
  for (const TaskRef& ref : tasks) {
    const ChainNodes nodes = chain_nodes(pairing, ref.user, c);
    ++nc.uav[static_cast<size_t>(nodes.uav)];
    ++nc.sat[static_cast<size_t>(nodes.sat)];
    if (nodes.tail.target == TailTarget::cloud)
      ++nc.cloud[static_cast<size_t>(nodes.tail.index)];
    else
      ++nc.sat[static_cast<size_t>(nodes.tail.index)];
  }
  return nc;
}

std::uint64_t int_pow(std::uint64_t base, int exp) {
  std::uint64_t r = 1;
  for (int i = 0; i < exp; ++i) {
    if (base != 0 && r > UINT64_MAX / base) return UINT64_MAX;
    r *= base;
  }
  return r;
}

Pairing decode_pairing(std::uint64_t idx, const Counts& c) {
  Pairing p;
  p.user_uav.resize(static_cast<size_t>(c.users));
  p.uav_sat.resize(static_cast<size_t>(c.uavs));
  p.sat_tail.resize(static_cast<size_t>(c.sats));
  const int tail_arms = c.sats - 1 + c.clouds;
  for (int l = c.sats - 1; l >= 0; --l) {
    p.sat_tail[static_cast<size_t>(l)] = static_cast<int>(idx % tail_arms);
    idx /= tail_arms;
  }
  for (int n = c.uavs - 1; n >= 0; --n) {
    p.uav_sat[static_cast<size_t>(n)] = static_cast<int>(idx % c.sats);
    idx /= c.sats;
  }
  for (int m = c.users - 1; m >= 0; --m) {
    p.user_uav[static_cast<size_t>(m)] = static_cast<int>(idx % c.uavs);
    idx /= c.uavs;
  }
  return p;
}

}  // namespace

double oracle_plan_objective(const Environment& env, const OffloadPlan& plan, Objective objective) {
  // Deliberately re-derived segment algebra; only rates/distances come from
  // the environment's channel state.
  const Scenario& sc = env.scenario();
  const double iota = sc.compute.energy_factor;
  const double b = sc.compute.overhead_factor;
  const double f_m = sc.compute.f_user_hz;
  const double c_light = sc.geo.light_speed_mps;

  double total_energy = 0;
  double total_latency = 0;
  for (size_t idx = 0; idx < plan.tasks.size(); ++idx) {
    const TaskRef& ref = plan.tasks[idx];
    const Task& task = env.state().graphs[ref.user].task(ref.task);
    const double W = task.data_size_bits;
    const double F = task.cpu_cycles;
    const double mu_m = plan.fractions[idx].mu_user;
    const double mu_n = plan.fractions[idx].mu_uav;
    const double mu_l = plan.fractions[idx].mu_sat;
    const LinkRates<double> r = env.link_rates(plan.pairing, ref.user);

    const double T_cm = mu_m * F / f_m;
    const double E_cm = iota * mu_m * F * f_m * f_m;

    double T_tmn = 0, E_tmn = 0;
    if (1.0 - mu_m > 0) {
      T_tmn = b * (1.0 - mu_m) * W / r.rate_user_uav;
      E_tmn = sc.rf.tx_power_user_w * T_tmn;
    }
    const double uav_share = mu_n * (1.0 - mu_m);
    double T_cn = 0, E_cn = 0;
    if (uav_share > 0) {
      T_cn = uav_share * F / plan.allocs[idx].f_uav_hz;
      E_cn = iota * uav_share * F * plan.allocs[idx].f_uav_hz * plan.allocs[idx].f_uav_hz;
    }

    const double fwd = (1.0 - mu_n) * (1.0 - mu_m);
    double T_tnl = 0, E_tnl = 0;
    if (fwd > 0) {
      const double tx = b * fwd * W / r.rate_uav_sat;
      T_tnl = r.dist_uav_sat_m / c_light + tx;
      E_tnl = sc.rf.tx_power_uav_w * tx;
    }
    const double sat_share = mu_l * fwd;
    double T_cl = 0, E_cl = 0;
    if (sat_share > 0) {
      T_cl = sat_share * F / plan.allocs[idx].f_sat_hz;
      E_cl = iota * sat_share * F * plan.allocs[idx].f_sat_hz * plan.allocs[idx].f_sat_hz;
    }

    const double rho = (1.0 - mu_l) * fwd;
    double T_ttail = 0, E_ttail = 0, T_ctail = 0, E_ctail = 0;
    if (rho > 0) {
      const double rate = plan.targets[idx] == TailTarget::cloud ? r.rate_sat_cloud : r.rate_isl;
      const double dist = plan.targets[idx] == TailTarget::cloud ? r.dist_sat_cloud_m : r.dist_isl_m;
      const double tx = b * rho * W / rate;
      T_ttail = dist / c_light + tx;
      E_ttail = sc.rf.tx_power_sat_w * tx;
      T_ctail = rho * F / plan.allocs[idx].f_tail_hz;
      E_ctail = iota * rho * F * plan.allocs[idx].f_tail_hz * plan.allocs[idx].f_tail_hz;
    }

    const double latency =
        std::max({T_cm, T_tmn + T_cn, T_tmn + T_tnl + T_cl, T_tmn + T_tnl + T_ttail + T_ctail});
    const double energy = E_cm + E_tmn + E_cn + E_tnl + E_cl + E_ttail + E_ctail;
    total_latency += latency;
    total_energy += energy;
  }
  return objective == Objective::energy ? total_energy : total_latency;
}

double library_plan_objective(const Environment& env, const OffloadPlan& plan, Objective objective) {
  const Scenario& sc = env.scenario();
  double total_energy = 0, total_latency = 0;
  for (size_t idx = 0; idx < plan.tasks.size(); ++idx) {
    const TaskRef& ref = plan.tasks[idx];
    const Task& task = env.state().graphs[ref.user].task(ref.task);
    const LinkRates<double> r = env.link_rates(plan.pairing, ref.user);
    const TaskMetrics<double> m =
        task_metrics(task, plan.fractions[idx], plan.allocs[idx], r, sc.compute, plan.targets[idx],
                     sc.rf.tx_power_user_w, sc.rf.tx_power_uav_w, sc.rf.tx_power_sat_w);
    total_energy += m.total_energy;
    total_latency += m.total_latency;
  }
  return objective == Objective::energy ? total_energy : total_latency;
}

OracleResult brute_force(const Environment& env, const GridSpec& grid, Objective objective,
                         int threads, const std::function<void(const OraclePlanEval&)>& audit) {
  grid.validate();
  const Counts& c = env.scenario().counts;
  const std::vector<TaskRef> tasks = env.ready_unscheduled();
  if (tasks.empty()) throw std::invalid_argument("brute_force: no ready tasks to plan");
  const int T = static_cast<int>(tasks.size());

  const std::uint64_t n_pairings = int_pow(static_cast<std::uint64_t>(c.uavs), c.users) *
                                   int_pow(static_cast<std::uint64_t>(c.sats), c.uavs) *
                                   int_pow(static_cast<std::uint64_t>(c.sats - 1 + c.clouds), c.sats);
  const int G = grid.mu_values();
  const int frac_slots = grid.per_task ? 3 * T : 3;
  const int alloc_slots = grid.per_task ? 3 * T : 3;
  const std::uint64_t n_frac = int_pow(static_cast<std::uint64_t>(G), frac_slots);
  const std::uint64_t n_alloc = int_pow(static_cast<std::uint64_t>(grid.alloc_levels), alloc_slots);
  if (n_pairings == UINT64_MAX || n_frac == UINT64_MAX || n_alloc == UINT64_MAX ||
      n_pairings > grid.max_plans / std::max<std::uint64_t>(1, n_frac * n_alloc) ||
      n_pairings * n_frac * n_alloc > grid.max_plans)
    throw cap_exceeded("brute_force: enumeration of " + std::to_string(n_pairings) + "x" +
                       std::to_string(n_frac) + "x" + std::to_string(n_alloc) +
                       " plans exceeds the cap");

  auto build_plan = [&](std::uint64_t p_idx, std::uint64_t f_idx, std::uint64_t a_idx) {
    OffloadPlan plan;
    plan.pairing = decode_pairing(p_idx, c);
    plan.tasks = tasks;
    const NodeCounts counts = count_tasks(plan.pairing, tasks, c);

    // Decode fraction digits, last slot fastest.
    std::vector<int> fdigit(static_cast<size_t>(frac_slots));
    for (int s = frac_slots - 1; s >= 0; --s) {
      fdigit[static_cast<size_t>(s)] = static_cast<int>(f_idx % G);
      f_idx /= G;
    }
    std::vector<int> adigit(static_cast<size_t>(alloc_slots));
    for (int s = alloc_slots - 1; s >= 0; --s) {
      adigit[static_cast<size_t>(s)] = static_cast<int>(a_idx % grid.alloc_levels);
      a_idx /= grid.alloc_levels;
    }

    for (int t = 0; t < T; ++t) {
      const int fo = grid.per_task ? 3 * t : 0;
      const int ao = grid.per_task ? 3 * t : 0;
      OffloadFractions<double> mu;
      mu.mu_user = std::min(1.0, fdigit[static_cast<size_t>(fo + 0)] * grid.mu_step);
      mu.mu_uav = std::min(1.0, fdigit[static_cast<size_t>(fo + 1)] * grid.mu_step);
      mu.mu_sat = std::min(1.0, fdigit[static_cast<size_t>(fo + 2)] * grid.mu_step);
      const CycleShares<double> shares = cycle_shares(mu);
      const ChainNodes nodes = chain_nodes(plan.pairing, tasks[static_cast<size_t>(t)].user, c);

      ResourceAlloc<double> alloc;
      const Scenario& sc = env.scenario();
      auto level = [&](int digit) { return (digit + 1) / static_cast<double>(grid.alloc_levels); };
      if (shares.uav > 0)
        alloc.f_uav_hz = level(adigit[static_cast<size_t>(ao + 0)]) * sc.compute.f_uav_max_hz /
                         counts.uav[static_cast<size_t>(nodes.uav)];
      if (shares.sat > 0)
        alloc.f_sat_hz = level(adigit[static_cast<size_t>(ao + 1)]) * sc.compute.f_sat_max_hz /
                         counts.sat[static_cast<size_t>(nodes.sat)];
      if (shares.tail > 0) {
        if (nodes.tail.target == TailTarget::cloud)
          alloc.f_tail_hz = level(adigit[static_cast<size_t>(ao + 2)]) * sc.compute.f_cloud_max_hz /
                            counts.cloud[static_cast<size_t>(nodes.tail.index)];
        else
          alloc.f_tail_hz = level(adigit[static_cast<size_t>(ao + 2)]) * sc.compute.f_sat_max_hz /
                            counts.sat[static_cast<size_t>(nodes.tail.index)];
      }
      plan.fractions.push_back(mu);
      plan.allocs.push_back(alloc);
      plan.targets.push_back(nodes.tail.target);
    }
    return plan;
  };

  struct Best {
    double objective = std::numeric_limits<double>::infinity();
    std::uint64_t flat = UINT64_MAX;
    OffloadPlan plan;
    std::uint64_t feasible = 0;
  };

  auto scan = [&](std::uint64_t p_begin, std::uint64_t p_end, Best& best) {
    for (std::uint64_t p = p_begin; p < p_end; ++p) {
      for (std::uint64_t f = 0; f < n_frac; ++f) {
        for (std::uint64_t a = 0; a < n_alloc; ++a) {
          const OffloadPlan plan = build_plan(p, f, a);
          const bool feasible = binding_violations(env.feasibility_check(plan), objective).empty();
          double obj = std::numeric_limits<double>::infinity();
          if (feasible) {
            obj = oracle_plan_objective(env, plan, objective);
            ++best.feasible;
            const std::uint64_t flat = (p * n_frac + f) * n_alloc + a;
            if (obj < best.objective || (obj == best.objective && flat < best.flat)) {
              best.objective = obj;
              best.flat = flat;
              best.plan = plan;
            }
          }
          if (audit) audit({plan, obj, feasible});
        }
      }
    }
  };

  Best best;
  std::uint64_t evaluated = n_pairings * n_frac * n_alloc;
  if (threads <= 1 || audit || n_pairings < 2) {
    scan(0, n_pairings, best);
  } else {
    const int n_threads = std::min<std::uint64_t>(threads, n_pairings);
    std::vector<Best> bests(static_cast<size_t>(n_threads));
    std::vector<std::thread> pool;
    const std::uint64_t per = (n_pairings + n_threads - 1) / n_threads;
    for (int t = 0; t < n_threads; ++t) {
      const std::uint64_t b0 = t * per, b1 = std::min(n_pairings, b0 + per);
      if (b0 >= b1) break;
      pool.emplace_back([&scan, &bests, t, b0, b1] { scan(b0, b1, bests[static_cast<size_t>(t)]); });
    }
    for (auto& th : pool) th.join();
    for (const Best& cand : bests) {
      best.feasible += cand.feasible;
      if (cand.objective < best.objective ||
          (cand.objective == best.objective && cand.flat < best.flat)) {
        best.objective = cand.objective;
        best.flat = cand.flat;
        best.plan = cand.plan;
      }
    }
  }

  if (!std::isfinite(best.objective))
    throw infeasible_everywhere("brute_force: no feasible plan in the enumerated grid");
  OracleResult res;
  res.best_plan = best.plan;
  res.best_objective = best.objective;
  res.evaluated = evaluated;
  res.feasible_count = best.feasible;
  return res;
}

}  // namespace sagmec
