#include <doctest.h>

#include <cmath>
#include <random>

#include "sagmec/baselines.hpp"
#include "sagmec/environment.hpp"

using namespace sagmec;

namespace {

Scenario micro_scenario() {
  Scenario s;
  s.counts = {2, 1, 2, 1, 2};  // users, uavs, sats, clouds, tasks
  s.tasks.edge_prob = 0.0;
  s.freeze_channels = true;
  s.fast_forward = true;
  s.seed = 1;
  return s;
}

Scenario single_task_scenario() {
  Scenario s;
  s.counts = {1, 1, 1, 1, 1};
  s.tasks.edge_prob = 0.0;
  s.freeze_channels = true;
  s.fast_forward = true;
  return s;
}

HybridAction all_local_action(const Environment& env) { return local_only_policy(env); }

}  // namespace

TEST_CASE("reset is deterministic and well formed") {
  Environment env(micro_scenario(), Objective::energy);
  env.reset(99);
  const std::string a = env.state().serialize();
  Environment env2(micro_scenario(), Objective::energy);
  env2.reset(99);
  CHECK(env2.state().serialize() == a);
  env2.reset(100);
  CHECK(env2.state().serialize() != a);

  // every task fraction starts at 1
  const Eigen::VectorXd obs = env.observation();
  const Counts& c = env.scenario().counts;
  const int frac_off = c.users * c.uavs + c.sats + c.sats * c.clouds;
  for (int i = 0; i < 4 * c.users * c.tasks_per_user; ++i)
    CHECK(obs[frac_off + i] == doctest::Approx(1.0));

  for (const auto& q : env.state().positions.uav_xyz_m) {
    CHECK(q.z() >= 50.0);
    CHECK(q.z() <= 60.0);
  }
}

TEST_CASE("zero displacement leaves UAVs in place") {
  Environment env(micro_scenario(), Objective::energy);
  env.reset(3);
  const Eigen::Vector3d before = env.state().positions.uav_xyz_m[0];
  HybridAction a = all_local_action(env);
  env.step(a);
  CHECK(env.state().positions.uav_xyz_m[0] == before);
}

TEST_CASE("displacement is capped and clamped to the box") {
  Scenario s = micro_scenario();
  Environment env(s, Objective::energy);
  env.reset(4);
  HybridAction a = all_local_action(env);
  a.continuous[0] = 1000.0;  // dx far beyond the 10 m cap
  a.continuous[1] = 0.0;
  a.continuous[2] = 0.0;
  const Eigen::Vector3d before = env.state().positions.uav_xyz_m[0];
  env.step(a);
  const Eigen::Vector3d after = env.state().positions.uav_xyz_m[0];
  CHECK((after - before).norm() <= s.uav_max_step_m + 1e-9);
  CHECK(after.x() <= s.box.x_max);
}

TEST_CASE("all-local single task episode accrues exactly the local energy") {
  Environment env(single_task_scenario(), Objective::energy);
  env.reset(5);
  const StepResult res = env.step(all_local_action(env));
  CHECK(res.done);
  CHECK(env.all_done());
  CHECK(env.total_energy_j() == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(env.total_latency_s() == doctest::Approx(30.0).epsilon(1e-12));
  CHECK(res.reward == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  const double accrued = env.state().user_energy_j[0];
  CHECK(accrued == doctest::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("stepping a finished episode throws") {
  Environment env(single_task_scenario(), Objective::energy);
  env.reset(5);
  env.step(all_local_action(env));
  CHECK_THROWS_AS(env.step(all_local_action(env)), std::logic_error);
}

TEST_CASE("NaN and dimension mismatches are rejected") {
  Environment env(micro_scenario(), Objective::energy);
  env.reset(6);
  HybridAction a = all_local_action(env);
  a.continuous[0] = std::nan("");
  CHECK_THROWS_AS(env.step(a), std::invalid_argument);
  HybridAction b = all_local_action(env);
  b.continuous.resize(3);
  CHECK_THROWS_AS(env.step(b), std::invalid_argument);
  HybridAction c = all_local_action(env);
  c.pairing.user_uav.pop_back();
  CHECK_THROWS_AS(env.step(c), std::invalid_argument);
}

TEST_CASE("over-cap UAV allocations are renormalized to the capacity") {
  Scenario s = micro_scenario();
  s.t_max_s = 1000;
  Environment env(s, Objective::energy);
  env.reset(7);
  // all four tasks offload fully to the single UAV, each asking for the cap
  HybridAction a = all_local_action(env);
  const Counts& c = s.counts;
  for (int m = 0; m < c.users; ++m)
    for (int i = 0; i < c.tasks_per_user; ++i) {
      const int base = 3 * c.uavs + 6 * (m * c.tasks_per_user + i);
      a.continuous[base + 0] = 0.0;  // mu_user
      a.continuous[base + 1] = 1.0;  // mu_uav
      a.continuous[base + 2] = 0.0;
      a.continuous[base + 3] = 1.0;  // request the full UAV
    }
  bool normalized = false;
  const OffloadPlan plan = env.plan_from_action(a, &normalized);
  CHECK(normalized);
  REQUIRE(plan.tasks.size() == 4);
  double sum = 0;
  for (const auto& alloc : plan.allocs) sum += alloc.f_uav_hz;
  CHECK(sum == doctest::Approx(s.compute.f_uav_max_hz).epsilon(1e-12));

  const StepResult res = env.step(a);
  CHECK(res.info.normalized);
  // normalization keeps capacity letters out of the violation list
  for (const Violation& v : res.info.violations) {
    CHECK(v.constraint != "32e");
    CHECK(v.constraint != "32f");
    CHECK(v.constraint != "32g");
  }
}

TEST_CASE("reward functions") {
  CHECK(reward_energy(100.0) == doctest::Approx(0.01).epsilon(1e-15));
  // reciprocal of a Fig.6-scale total: 1/18130 J
  CHECK(reward_energy(18130.0) == doctest::Approx(5.515719801434087e-05).epsilon(1e-12));
  CHECK(reward_energy(18130.0) == doctest::Approx(5.516e-5).epsilon(1e-3));
  CHECK(reward_energy(0.0) == doctest::Approx(1e6));
  CHECK(reward_energy(2 * 70.0) == doctest::Approx(reward_energy(70.0) / 2).epsilon(1e-12));
  CHECK(reward_latency(50.0) == doctest::Approx(0.02).epsilon(1e-15));
  CHECK(reward_latency(1e12) == doctest::Approx(1e-12));
  // depends only on the sum
  CHECK(reward_latency(10 + 40) == doctest::Approx(reward_latency(25 + 25)));
}

TEST_CASE("latency budget violation terminates with 32h and the excess") {
  Scenario s = single_task_scenario();
  s.counts.tasks_per_user = 2;
  s.t_max_s = 50;
  Environment env(s, Objective::energy);
  env.reset(8);
  const StepResult res = env.step(all_local_action(env));  // 2 x 30 s > 50 s
  CHECK(res.done);
  CHECK(!env.all_done());
  REQUIRE(res.info.violations.size() == 1);
  CHECK(res.info.violations[0].constraint == "32h");
  CHECK(res.info.violations[0].magnitude == doctest::Approx(10.0).epsilon(1e-9));
  CHECK(res.reward == 0.0);
}

TEST_CASE("energy budget violation terminates with 33a under the latency objective") {
  Scenario s = single_task_scenario();
  s.e_max_j = 2.0;  // below the 3 J local cost
  Environment env(s, Objective::latency);
  env.reset(9);
  const StepResult res = env.step(all_local_action(env));
  CHECK(res.done);
  REQUIRE(!res.info.violations.empty());
  CHECK(res.info.violations[0].constraint == "33a");
  CHECK(res.info.violations[0].magnitude == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("the energy objective ignores the energy budget") {
  Scenario s = single_task_scenario();
  s.e_max_j = 2.0;
  Environment env(s, Objective::energy);
  env.reset(9);
  const StepResult res = env.step(all_local_action(env));
  CHECK(res.done);
  CHECK(res.info.violations.empty());
  CHECK(env.all_done());
}

TEST_CASE("fresh mask has every discrete action available") {
  Environment env(micro_scenario(), Objective::energy);
  env.reset(10);
  const ActionMask mask = env.action_mask();
  for (const auto& head : mask.discrete)
    for (auto arm : head) CHECK(arm == 1);
  for (Eigen::Index d = 0; d < mask.lo.size(); ++d) CHECK(mask.lo[d] <= mask.hi[d]);
}

TEST_CASE("an expired satellite window masks every arm referencing it") {
  Scenario s = micro_scenario();
  // satellite 1 starts beyond its own window
  s.placement.sat_spacing_min_m = 1.9e6;
  s.placement.sat_spacing_max_m = 1.9e6;
  Environment env(s, Objective::energy);
  env.reset(11);
  CHECK(env.sat_window_remaining_s(0) > 0);
  CHECK(env.sat_window_remaining_s(1) == 0.0);
  const ActionMask mask = env.action_mask();
  const Counts& c = s.counts;
  // uav -> satellite heads: arm 1 masked
  for (int n = 0; n < c.uavs; ++n) {
    CHECK(mask.discrete[c.users + n][0] == 1);
    CHECK(mask.discrete[c.users + n][1] == 0);
  }
  // satellite 0's tail head: the ISL arm to satellite 1 is masked
  const int tail_head_0 = c.users + c.uavs + 0;
  CHECK(mask.discrete[tail_head_0][0] == 0);  // ISL to the dead satellite
}

TEST_CASE("scheduled tasks force zero continuous bounds") {
  Scenario s = micro_scenario();
  s.t_max_s = 200;         // two 30 s local tasks per user must fit the budget
  s.fast_forward = false;  // stay inside the task's run
  Environment env(s, Objective::energy);
  env.reset(12);
  env.step(all_local_action(env));
  const ActionMask mask = env.action_mask();
  const Counts& c = s.counts;
  const int base = 3 * c.uavs;  // first task slot of user 0
  for (int d = 0; d < 6; ++d) {
    CHECK(mask.lo[base + d] == 0.0);
    CHECK(mask.hi[base + d] == 0.0);
  }
}

TEST_CASE("trajectories are bitwise deterministic under a fixed action sequence") {
  Scenario s = micro_scenario();
  s.freeze_channels = false;  // exercise the channel stream too
  s.fast_forward = false;
  auto run = [&s]() {
    Environment env(s, Objective::energy);
    env.reset(13);
    std::mt19937_64 rng(77);
    std::string dump;
    for (int step = 0; step < 20; ++step) {
      const HybridAction a = random_policy(env, env.action_mask(), rng);
      const StepResult res = env.step(a);
      dump += env.state().serialize();
      if (res.done) break;
    }
    return dump;
  };
  CHECK(run() == run());
}

TEST_CASE("cycle conservation and energy accounting at episode end") {
  Scenario s = micro_scenario();
  s.t_max_s = 1000;
  Environment env(s, Objective::energy);
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 10; ++trial) {
    env.reset(100 + trial);
    double reward = 0;
    for (int step = 0; step < 500; ++step) {
      const StepResult res = env.step(random_policy(env, env.action_mask(), rng));
      reward += res.reward;
      if (res.done) break;
    }
    if (!env.all_done()) continue;
    // shares of every completed task telescope to its full cycle demand
    for (const auto& per_user : env.state().tasks)
      for (const auto& rt : per_user) {
        REQUIRE(rt.schedule.has_value());
        const CycleShares<double>& sh = rt.schedule->shares;
        CHECK(std::abs(sh.local + sh.uav + sh.sat + sh.tail - 1.0) <= 1e-12);
      }
    // accrued pro-rata energy equals the committed metric totals
    double accrued = 0, committed = 0;
    for (double e : env.state().user_energy_j) accrued += e;
    for (double e : env.state().user_energy_committed_j) committed += e;
    CHECK(std::abs(accrued - committed) <= 1e-9 * std::max(1.0, committed));
  }
}

TEST_CASE("mask-sound actions never raise link or tier errors") {
  Scenario s = micro_scenario();
  s.placement.sat_spacing_min_m = 1.9e6;  // one dead satellite to make masking bind
  s.placement.sat_spacing_max_m = 1.9e6;
  Environment env(s, Objective::energy);
  std::mt19937_64 rng(15);
  for (int trial = 0; trial < 20; ++trial) {
    env.reset(200 + trial);
    for (int step = 0; step < 50; ++step) {
      const HybridAction a = random_policy(env, env.action_mask(), rng);
      StepResult res;
      CHECK_NOTHROW(res = env.step(a));
      if (res.done) break;
    }
  }
}

TEST_CASE("feasibility check reports ok for a clean plan") {
  Scenario s = micro_scenario();
  s.t_max_s = 200;
  Environment env(s, Objective::energy);
  env.reset(16);
  bool normalized = false;
  const OffloadPlan plan = env.plan_from_action(all_local_action(env), &normalized);
  CHECK(!normalized);
  CHECK(env.feasibility_check(plan).ok());
}

TEST_CASE("dense reward mode emits per-slot reciprocals") {
  Scenario s = single_task_scenario();
  s.dense_reward = true;
  s.fast_forward = false;
  Environment env(s, Objective::energy);
  env.reset(17);
  const StepResult res = env.step(all_local_action(env));
  CHECK(!res.done);
  // one slot of a 30 s / 3 J task accrues 0.1 J
  CHECK(res.info.step_energy_j == doctest::Approx(0.1).epsilon(1e-9));
  CHECK(res.reward == doctest::Approx(reward_energy(0.1)).epsilon(1e-9));
}
