#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sagmec/channel.hpp"
#include "sagmec/geometry.hpp"
#include "sagmec/offload.hpp"

namespace sagmec {

enum class Objective { energy, latency };  // P1 / P2

inline const char* to_string(Objective o) { return o == Objective::energy ? "energy" : "latency"; }

struct Counts {
  int users = 12;
  int uavs = 3;
  int sats = 5;
  int clouds = 3;
  int tasks_per_user = 10;
};

struct FlightBox {
  double x_min = 0, x_max = 200;
  double y_min = 0, y_max = 200;
  double z_min = 50, z_max = 60;
};

struct TaskGenParams {
  double size_min_bits = 4.8e6;  // 0.6 MB
  double size_max_bits = 9.6e6;  // 1.2 MB
  double cpu_cycles = 3e9;
  double edge_prob = 0.3;
};

struct PlacementParams {
  double user_area_m = 200;
  double uav_init_height_m = 60;
  double sat_spacing_min_m = 1e5;
  double sat_spacing_max_m = 5e5;
  double cloud_spacing_min_m = 5e4;
  double cloud_spacing_max_m = 1e5;
};

/// Full static description of one experiment instance.
struct Scenario {
  Counts counts;
  GeoParams<double> geo;
  RfParams<double> rf;
  ComputeParams<double> compute;
  TaskGenParams tasks;
  PlacementParams placement;
  FlightBox box;
  double t_max_s = 50;
  double e_max_j = 400;
  double uav_max_step_m = 10;
  double slot_s = 1;
  std::uint64_t seed = 1;

  // Environment behaviour knobs.
  bool freeze_channels = false;   // sample gains once at reset
  bool fast_forward = false;      // skip slots with nothing to schedule
  bool dense_reward = false;      // per-slot reciprocal instead of terminal
  double reward_scale = 1.0;
  int max_slots = 100000;

  void validate() const;
};

/// Every error found while validating a scenario, keyed by config path.
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::vector<std::string>& issues);
  std::vector<std::string> issues;
};

}  // namespace sagmec
