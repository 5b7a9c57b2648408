#include <doctest.h>

#include <cmath>
#include <random>

#include "sagmec/baselines.hpp"
#include "sagmec/oracle.hpp"

using namespace sagmec;

namespace {

Scenario tiny_scenario() {
  Scenario s;
  s.counts = {1, 1, 1, 1, 1};
  s.tasks.edge_prob = 0.0;
  s.freeze_channels = true;
  s.fast_forward = true;
  return s;
}

Scenario micro_scenario() {
  Scenario s;
  s.counts = {2, 1, 2, 1, 2};
  s.tasks.edge_prob = 0.0;
  s.freeze_channels = true;
  s.fast_forward = true;
  return s;
}

}  // namespace

TEST_CASE("grid validation") {
  GridSpec g;
  g.mu_step = 0.3;
  CHECK_THROWS_AS(g.validate(), std::invalid_argument);
  g.mu_step = 0.25;
  g.alloc_levels = 0;
  CHECK_THROWS_AS(g.validate(), std::invalid_argument);
  g = GridSpec{};
  CHECK(g.mu_values() == 5);
  g.mu_step = 0.5;
  CHECK(g.mu_values() == 3);
}

TEST_CASE("single-chain instance enumerates 27 fraction triples") {
  Environment env(tiny_scenario(), Objective::energy);
  env.reset(1);
  GridSpec grid;
  grid.mu_step = 0.5;
  grid.alloc_levels = 2;

  std::uint64_t count = 0;
  double best_seen = std::numeric_limits<double>::infinity();
  bool saw_all_local = false;
  const OracleResult res =
      brute_force(env, grid, Objective::energy, 1, [&](const OraclePlanEval& row) {
        ++count;
        if (row.feasible) best_seen = std::min(best_seen, row.objective);
        if (row.plan.fractions[0].mu_user == 1.0) saw_all_local = true;
      });
  // 1 pairing x 27 fraction triples x 8 allocation triples
  CHECK(count == 27 * 8);
  CHECK(res.evaluated == 27 * 8);
  CHECK(res.best_objective == doctest::Approx(best_seen).epsilon(1e-15));
  CHECK(saw_all_local);
  CHECK(res.feasible_count > 0);
  // all-local is feasible here (30 s < 50 s), so the optimum cannot exceed 3 J
  CHECK(res.best_objective <= 3.0 + 1e-12);
}

TEST_CASE("degenerate binary grid still contains the all-local plan") {
  Environment env(tiny_scenario(), Objective::energy);
  env.reset(2);
  GridSpec grid;
  grid.mu_step = 1.0;
  grid.alloc_levels = 1;
  bool saw_all_local = false;
  brute_force(env, grid, Objective::energy, 1, [&](const OraclePlanEval& row) {
    if (row.plan.fractions[0].mu_user == 1.0 && row.feasible) saw_all_local = true;
  });
  CHECK(saw_all_local);
}

TEST_CASE("oracle and offload-metrics objectives agree on every enumerated plan") {
  Environment env(micro_scenario(), Objective::energy);
  env.reset(3);
  GridSpec grid;
  grid.mu_step = 0.5;
  grid.alloc_levels = 2;
  int checked = 0;
  brute_force(env, grid, Objective::energy, 1, [&](const OraclePlanEval& row) {
    if (!row.feasible) return;
    const double lib = library_plan_objective(env, row.plan, Objective::energy);
    CHECK(std::abs(row.objective - lib) <= 1e-9 * std::max(1.0, std::abs(lib)));
    const double lib_lat = library_plan_objective(env, row.plan, Objective::latency);
    const double ora_lat = oracle_plan_objective(env, row.plan, Objective::latency);
    CHECK(std::abs(ora_lat - lib_lat) <= 1e-9 * std::max(1.0, std::abs(lib_lat)));
    ++checked;
  });
  CHECK(checked > 100);
}

TEST_CASE("refining the grid never raises the optimum") {
  Environment env(micro_scenario(), Objective::energy);
  env.reset(4);
  GridSpec coarse;
  coarse.mu_step = 0.5;
  coarse.alloc_levels = 2;
  GridSpec fine;
  fine.mu_step = 0.25;
  fine.alloc_levels = 4;
  const double coarse_best = brute_force(env, coarse, Objective::energy).best_objective;
  const double fine_best = brute_force(env, fine, Objective::energy).best_objective;
  CHECK(fine_best <= coarse_best + 1e-12);
}

TEST_CASE("enumeration cap and infeasible instances raise") {
  Environment env(micro_scenario(), Objective::energy);
  env.reset(5);
  GridSpec grid;
  grid.max_plans = 10;
  CHECK_THROWS_AS(brute_force(env, grid, Objective::energy), cap_exceeded);

  Scenario hopeless = micro_scenario();
  hopeless.t_max_s = 1e-6;
  Environment env2(hopeless, Objective::energy);
  env2.reset(5);
  GridSpec tiny;
  tiny.mu_step = 1.0;
  tiny.alloc_levels = 1;
  CHECK_THROWS_AS(brute_force(env2, tiny, Objective::energy), infeasible_everywhere);
}

TEST_CASE("thread partitioning preserves the argmin") {
  Environment env(micro_scenario(), Objective::energy);
  env.reset(6);
  GridSpec grid;
  grid.mu_step = 0.5;
  grid.alloc_levels = 2;
  const OracleResult a = brute_force(env, grid, Objective::energy, 1);
  const OracleResult b = brute_force(env, grid, Objective::energy, 4);
  CHECK(a.best_objective == b.best_objective);
  CHECK(a.feasible_count == b.feasible_count);
  CHECK(a.best_plan.fractions[0].mu_user == b.best_plan.fractions[0].mu_user);
}

TEST_CASE("no shipped policy beats the oracle on its own instance") {
  Environment env(micro_scenario(), Objective::energy);
  env.reset(7);
  GridSpec grid;  // 0.25 / 4 levels
  const double oracle_best = brute_force(env, grid, Objective::energy, 2).best_objective;

  const EpisodeOutcome local =
      play_episode(env, 7, [](const Environment& e) { return local_only_policy(e); });
  if (local.completed) CHECK(local.energy_j >= oracle_best - 1e-9);

  const EpisodeOutcome greedy =
      play_episode(env, 7, [](const Environment& e) { return greedy_policy(e, e.action_mask()); });
  if (greedy.completed) CHECK(greedy.energy_j >= oracle_best - 1e-9);

  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const EpisodeOutcome r = play_episode(env, 7, [&rng](const Environment& e) {
      return random_policy(e, e.action_mask(), rng);
    });
    if (r.completed) CHECK(r.energy_j >= oracle_best - 1e-9);
  }
}

TEST_CASE("latency objective oracle") {
  Environment env(micro_scenario(), Objective::latency);
  env.reset(9);
  GridSpec grid;
  grid.mu_step = 0.5;
  grid.alloc_levels = 2;
  const OracleResult res = brute_force(env, grid, Objective::latency);
  CHECK(res.best_objective > 0);
  // offloading everything beats four 30-second local runs under P2
  CHECK(res.best_objective < 120.0);
}
