#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "sagmec/scenario.hpp"
#include "sagmec/taskgraph.hpp"

namespace sagmec {

/// One-hot pairing choices, stored as the selected index per row.
/// Tail arms for satellite l: [0, L-2] pick a peer satellite (self skipped),
/// [L-1, L-2+K] pick a cloud server.
struct Pairing {
  std::vector<int> user_uav;  // size M, in [0, N)
  std::vector<int> uav_sat;   // size N, in [0, L)
  std::vector<int> sat_tail;  // size L, in [0, L-1+K)
};

/// Decodes the tail arm of satellite `sat` among L satellites.
struct TailChoice {
  TailTarget target = TailTarget::none;
  int index = -1;  // peer satellite or cloud index
};
TailChoice decode_tail(int sat, int arm, int n_sats, int n_clouds);
int encode_tail(int sat, TailChoice choice, int n_sats);

/// Availability of every discrete arm plus box bounds for every continuous
/// dimension (physical units).
struct ActionMask {
  std::vector<std::vector<std::uint8_t>> discrete;  // per head, 1 = available
  Eigen::VectorXd lo, hi;
};

/// Joint action: pairings plus the flat continuous block
/// [uav displacements (3N) | per user-task slot: mu_user, mu_uav, mu_sat,
///  phi_uav, phi_sat, phi_tail].
struct HybridAction {
  Pairing pairing;
  Eigen::VectorXd continuous;
};

struct TaskRef {
  int user = 0;
  TaskId task = 0;
  bool operator<(const TaskRef& o) const { return user < o.user || (user == o.user && task < o.task); }
  bool operator==(const TaskRef& o) const { return user == o.user && task == o.task; }
};

/// Fractions and allocations for every task scheduled in one round.
struct OffloadPlan {
  Pairing pairing;
  std::vector<TaskRef> tasks;
  std::vector<OffloadFractions<double>> fractions;
  std::vector<ResourceAlloc<double>> allocs;
  std::vector<TailTarget> targets;
};

struct Violation {
  std::string constraint;  // "32a".."32i", "33a"
  double magnitude = 0;
  std::string detail;
};

struct FeasibilityReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

/// Chain timing for a committed task.
struct ScheduledTask {
  double start_s = 0;
  TaskMetrics<double> metrics;
  CycleShares<double> shares{0, 0, 0, 0};
  OffloadFractions<double> fractions;
  ResourceAlloc<double> alloc;
  // chain node indices
  int uav = -1, sat = -1, tail_node = -1;
  TailTarget target = TailTarget::none;
  // absolute segment windows [begin, end)
  double local_end = 0, uav_comp_begin = 0, uav_comp_end = 0;
  double sat_comp_begin = 0, sat_comp_end = 0, tail_comp_begin = 0, tail_comp_end = 0;
  double completion_s = 0;
};

enum class TaskStatus { pending, in_flight, done };

struct TaskRuntime {
  TaskStatus status = TaskStatus::pending;
  std::optional<ScheduledTask> schedule;
};

/// Full mutable episode state; value type so snapshots are plain copies.
struct EpisodeState {
  NodePositions positions;
  std::vector<TaskGraph> graphs;                     // one per user
  Eigen::MatrixXcd h_user_uav;                       // M x N
  Eigen::MatrixXcd h_uav_sat;                        // N x L
  Eigen::MatrixXcd h_sat_cloud;                      // L x K
  std::vector<std::vector<TaskRuntime>> tasks;       // [user][task index]
  std::vector<std::set<TaskId>> completed;           // per user
  double elapsed_s = 0;
  std::vector<double> user_energy_j;                 // accrued, pro-rata
  std::vector<double> user_energy_committed_j;       // sum of committed task energies
  std::vector<double> user_latency_committed_s;      // sum of committed task latencies
  std::vector<double> uav_flight_time_s;             // time spent serving
  std::vector<double> uav_load_hz, sat_load_hz, cloud_load_hz;
  std::uint64_t rng_state_tag = 0;                   // bumped on every resample
  std::mt19937_64 rng;

  std::string serialize() const;                     // bitwise-stable dump
};

struct StepInfo {
  bool normalized = false;                 // some allocation was clipped to capacity
  bool scheduled_round = false;
  int tasks_scheduled = 0;
  int tasks_deferred = 0;
  int tasks_completed_total = 0;
  std::vector<Violation> violations;       // nonempty iff terminated on a constraint
  double step_energy_j = 0;
  double dt_s = 0;
};

struct StepResult {
  double reward = 0;
  bool done = false;
  StepInfo info;
};

double reward_energy(double total_energy_j);
double reward_latency(double total_latency_s);

/// The MDP. One instance is single-threaded; copies are independent.
class Environment {
 public:
  Environment(Scenario scenario, Objective objective);

  const EpisodeState& reset(std::uint64_t seed);
  StepResult step(const HybridAction& action);

  ActionMask action_mask() const;
  Eigen::VectorXd observation() const;

  /// Evaluates every constraint of P1/P2 against the current state plus a
  /// hypothetical plan for this round. Report-only.
  FeasibilityReport feasibility_check(const OffloadPlan& plan) const;

  /// Builds the normalized plan the env would commit for `action` right now,
  /// without committing it. Mirrors the first half of step().
  OffloadPlan plan_from_action(const HybridAction& action, bool* normalized = nullptr,
                               std::vector<TaskRef>* deferred = nullptr) const;

  /// Rates and distances seen by one task chain under `pairing` right now.
  LinkRates<double> link_rates(const Pairing& pairing, int user) const;

  // Introspection.
  const Scenario& scenario() const { return scenario_; }
  Objective objective() const { return objective_; }
  const EpisodeState& state() const { return state_; }
  std::vector<TaskRef> ready_unscheduled() const;
  bool all_done() const;
  double total_energy_j() const;
  double total_latency_s() const;   // sum of committed task latencies
  double coverage_window_s() const { return coverage_window_s_; }
  double sat_window_remaining_s(int sat) const;
  double cloud_window_remaining_s(int sat, int cloud) const;

  int n_heads() const;
  std::vector<int> head_sizes() const;
  int continuous_dim() const;
  int observation_dim() const;

  /// Maps a canonical action (arms + [-1,1]^D vector) into physical units via
  /// the mask boxes.
  HybridAction from_canonical(const ActionMask& mask, const std::vector<int>& arms,
                              const Eigen::VectorXd& u) const;

  static int n_heads(const Counts& c) { return c.users + c.uavs + c.sats; }

 private:
  void resample_channels();
  void place_nodes();
  void advance_time(double dt, StepInfo& info);
  void commit_plan(const OffloadPlan& plan, StepInfo& info);
  double next_event_dt() const;

  Scenario scenario_;
  Objective objective_;
  double coverage_window_s_ = 0;
  EpisodeState state_;
  bool episode_done_ = true;
};

}  // namespace sagmec
