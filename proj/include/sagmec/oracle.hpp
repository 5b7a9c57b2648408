#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>

#include "sagmec/environment.hpp"

namespace sagmec {

struct cap_exceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct infeasible_everywhere : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Enumeration grid for the exhaustive oracle. mu_step must divide 1 evenly;
/// allocation levels are the fractions {1/n, 2/n, ..., 1} of the per-node
/// fair share.
struct GridSpec {
  double mu_step = 0.25;
  int alloc_levels = 4;
  bool per_task = false;  // independent grids per task instead of one shared triple
  std::uint64_t max_plans = 5'000'000;

  void validate() const;
  int mu_values() const;
};

struct OraclePlanEval {
  OffloadPlan plan;
  double objective = 0;
  bool feasible = false;
};

struct OracleResult {
  OffloadPlan best_plan;
  double best_objective = 0;
  std::uint64_t evaluated = 0;
  std::uint64_t feasible_count = 0;
};

/// Filters a feasibility report down to the constraints binding for the
/// objective: P1 carries the latency budget (32h), P2 the energy budget (33a).
std::vector<Violation> binding_violations(const FeasibilityReport& report, Objective objective);

/// Straight-line recomputation of one plan's totals, kept deliberately
/// separate from the offload metrics chain. Returns the P1/P2 objective.
double oracle_plan_objective(const Environment& env, const OffloadPlan& plan, Objective objective);

/// The same objective via the offload metrics path, for equivalence checks.
double library_plan_objective(const Environment& env, const OffloadPlan& plan, Objective objective);

/// Exhaustive search over all one-hot pairings x gridded fractions x gridded
/// allocations for the tasks ready in `env` right now. Feasibility-filtered;
/// ties break toward the lexicographically first plan. `audit`, when set,
/// forces single-threaded enumeration and sees every evaluated plan in order.
OracleResult brute_force(const Environment& env, const GridSpec& grid, Objective objective,
                         int threads = 1,
                         const std::function<void(const OraclePlanEval&)>& audit = nullptr);

}  // namespace sagmec
