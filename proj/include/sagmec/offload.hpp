#pragma once

#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>

#include "sagmec/taskgraph.hpp"

namespace sagmec {

struct infeasible_link : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct target_mismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <typename Scalar = double>
struct ComputeParams {
  Scalar energy_factor = Scalar(1e-25);  // J per cycle per Hz^2
  Scalar overhead_factor = Scalar(1.2);  // transmission overhead, > 1
  Scalar f_user_hz = Scalar(1e8);
  Scalar f_uav_max_hz = Scalar(5e8);
  Scalar f_sat_max_hz = Scalar(1e9);
  Scalar f_cloud_max_hz = Scalar(3e9);

  void validate() const {
    if (!(energy_factor > Scalar(0))) throw std::invalid_argument("ComputeParams: energy factor must be positive");
    if (!(overhead_factor > Scalar(1))) throw std::invalid_argument("ComputeParams: overhead factor must exceed 1");
    if (!(f_user_hz > Scalar(0)) || !(f_uav_max_hz > Scalar(0)) || !(f_sat_max_hz > Scalar(0)) ||
        !(f_cloud_max_hz > Scalar(0)))
      throw std::invalid_argument("ComputeParams: capacities must be positive");
  }
};

/// Partial-offload split: each tier keeps mu of whatever reaches it.
template <typename Scalar = double>
struct OffloadFractions {
  Scalar mu_user = Scalar(1);
  Scalar mu_uav = Scalar(0);
  Scalar mu_sat = Scalar(0);

  void validate() const {
    auto in01 = [](Scalar x) { return x >= Scalar(0) && x <= Scalar(1); };
    if (!in01(mu_user) || !in01(mu_uav) || !in01(mu_sat))
      throw std::invalid_argument("OffloadFractions: fractions must lie in [0,1]");
  }
};

/// CPU rate granted to one task at each remote tier.
template <typename Scalar = double>
struct ResourceAlloc {
  Scalar f_uav_hz = Scalar(0);
  Scalar f_sat_hz = Scalar(0);
  Scalar f_tail_hz = Scalar(0);  // ISL peer satellite or cloud, per TailTarget
};

template <typename Scalar = double>
struct LinkRates {
  Scalar rate_user_uav = Scalar(0);
  Scalar rate_uav_sat = Scalar(0);
  Scalar rate_isl = Scalar(0);
  Scalar rate_sat_cloud = Scalar(0);
  Scalar dist_uav_sat_m = Scalar(0);
  Scalar dist_isl_m = Scalar(0);
  Scalar dist_sat_cloud_m = Scalar(0);
  Scalar light_speed_mps = Scalar(299792458.0);
};

enum class TailTarget { none, isl_satellite, cloud };

template <typename Scalar = double>
struct SegmentCost {
  Scalar tx_time = Scalar(0);
  Scalar tx_energy = Scalar(0);
  Scalar comp_time = Scalar(0);
  Scalar comp_energy = Scalar(0);
};

/// All per-segment costs of one task under one plan, plus the chain totals.
template <typename Scalar = double>
struct TaskMetrics {
  Scalar local_time = Scalar(0), local_energy = Scalar(0);
  SegmentCost<Scalar> uav, sat, tail;
  TailTarget target = TailTarget::none;
  Scalar total_latency = Scalar(0);
  Scalar total_energy = Scalar(0);
};

/// Cycle share that lands on each tier for a fraction triple.
template <typename Scalar>
struct CycleShares {
  Scalar local, uav, sat, tail;
};

template <typename Scalar>
CycleShares<Scalar> cycle_shares(const OffloadFractions<Scalar>& mu) {
  const Scalar to_uav = Scalar(1) - mu.mu_user;
  const Scalar to_sat = to_uav * (Scalar(1) - mu.mu_uav);
  return {mu.mu_user, to_uav * mu.mu_uav, to_sat * mu.mu_sat, to_sat * (Scalar(1) - mu.mu_sat)};
}

/// Local compute time and energy for the share kept at the ground user.
template <typename Scalar>
std::pair<Scalar, Scalar> local_segment(const Task& task, const OffloadFractions<Scalar>& mu,
                                        const ComputeParams<Scalar>& compute) {
  mu.validate();
  if (!(compute.f_user_hz > Scalar(0))) throw std::invalid_argument("local_segment: zero local CPU");
  const Scalar share = mu.mu_user;
  if (share == Scalar(0)) return {Scalar(0), Scalar(0)};
  const Scalar t = share * Scalar(task.cpu_cycles) / compute.f_user_hz;
  const Scalar e = compute.energy_factor * share * Scalar(task.cpu_cycles) * compute.f_user_hz * compute.f_user_hz;
  return {t, e};
}

template <typename Scalar>
SegmentCost<Scalar> uav_segment(const Task& task, const OffloadFractions<Scalar>& mu,
                                const ResourceAlloc<Scalar>& alloc, const LinkRates<Scalar>& rates,
                                const ComputeParams<Scalar>& compute, Scalar tx_power_user_w) {
  SegmentCost<Scalar> seg;
  const Scalar offloaded = Scalar(1) - mu.mu_user;
  if (offloaded > Scalar(0)) {
    if (!(rates.rate_user_uav > Scalar(0))) throw infeasible_link("uav_segment: user-UAV rate is zero");
    seg.tx_time = compute.overhead_factor * offloaded * Scalar(task.data_size_bits) / rates.rate_user_uav;
    seg.tx_energy = tx_power_user_w * seg.tx_time;
  }
  const Scalar share = mu.mu_uav * offloaded;
  if (share > Scalar(0)) {
    if (!(alloc.f_uav_hz > Scalar(0))) throw infeasible_link("uav_segment: zero UAV allocation");
    seg.comp_time = share * Scalar(task.cpu_cycles) / alloc.f_uav_hz;
    seg.comp_energy = compute.energy_factor * share * Scalar(task.cpu_cycles) * alloc.f_uav_hz * alloc.f_uav_hz;
  }
  return seg;
}

template <typename Scalar>
SegmentCost<Scalar> sat_segment(const Task& task, const OffloadFractions<Scalar>& mu,
                                const ResourceAlloc<Scalar>& alloc, const LinkRates<Scalar>& rates,
                                const ComputeParams<Scalar>& compute, Scalar tx_power_uav_w) {
  SegmentCost<Scalar> seg;
  const Scalar forwarded = (Scalar(1) - mu.mu_uav) * (Scalar(1) - mu.mu_user);
  if (forwarded > Scalar(0)) {
    if (!(rates.rate_uav_sat > Scalar(0))) throw infeasible_link("sat_segment: UAV-satellite rate is zero");
    const Scalar tx = compute.overhead_factor * forwarded * Scalar(task.data_size_bits) / rates.rate_uav_sat;
    seg.tx_time = rates.dist_uav_sat_m / rates.light_speed_mps + tx;
    seg.tx_energy = tx_power_uav_w * tx;  // propagation carries no transmit energy
  }
  const Scalar share = mu.mu_sat * forwarded;
  if (share > Scalar(0)) {
    if (!(alloc.f_sat_hz > Scalar(0))) throw infeasible_link("sat_segment: zero satellite allocation");
    seg.comp_time = share * Scalar(task.cpu_cycles) / alloc.f_sat_hz;
    seg.comp_energy = compute.energy_factor * share * Scalar(task.cpu_cycles) * alloc.f_sat_hz * alloc.f_sat_hz;
  }
  return seg;
}

template <typename Scalar>
SegmentCost<Scalar> tail_segment(const Task& task, const OffloadFractions<Scalar>& mu,
                                 const ResourceAlloc<Scalar>& alloc, const LinkRates<Scalar>& rates,
                                 const ComputeParams<Scalar>& compute, Scalar tx_power_sat_w,
                                 TailTarget target) {
  SegmentCost<Scalar> seg;
  const Scalar residual =
      (Scalar(1) - mu.mu_sat) * (Scalar(1) - mu.mu_uav) * (Scalar(1) - mu.mu_user);
  if (residual == Scalar(0)) {
    if (alloc.f_tail_hz > Scalar(0))
      throw target_mismatch("tail_segment: tail allocation for a fully absorbed task");
    return seg;
  }
  if (target == TailTarget::none) throw target_mismatch("tail_segment: residual share but no tail target");
  const Scalar rate = target == TailTarget::cloud ? rates.rate_sat_cloud : rates.rate_isl;
  const Scalar dist = target == TailTarget::cloud ? rates.dist_sat_cloud_m : rates.dist_isl_m;
  if (!(rate > Scalar(0))) throw infeasible_link("tail_segment: tail link rate is zero");
  const Scalar tx = compute.overhead_factor * residual * Scalar(task.data_size_bits) / rate;
  seg.tx_time = dist / rates.light_speed_mps + tx;
  seg.tx_energy = tx_power_sat_w * tx;
  if (!(alloc.f_tail_hz > Scalar(0))) throw infeasible_link("tail_segment: zero tail allocation");
  seg.comp_time = residual * Scalar(task.cpu_cycles) / alloc.f_tail_hz;
  seg.comp_energy =
      compute.energy_factor * residual * Scalar(task.cpu_cycles) * alloc.f_tail_hz * alloc.f_tail_hz;
  return seg;
}

/// Full chain algebra for one task: latency is the max over the five partial
/// chains (local, UAV, satellite, ISL tail, cloud tail); energy is the sum of
/// every segment's transmit and compute cost.
template <typename Scalar>
TaskMetrics<Scalar> task_metrics(const Task& task, const OffloadFractions<Scalar>& mu,
                                 const ResourceAlloc<Scalar>& alloc, const LinkRates<Scalar>& rates,
                                 const ComputeParams<Scalar>& compute, TailTarget target,
                                 Scalar tx_power_user_w, Scalar tx_power_uav_w, Scalar tx_power_sat_w) {
  TaskMetrics<Scalar> m;
  m.target = target;
  std::tie(m.local_time, m.local_energy) = local_segment(task, mu, compute);
  m.uav = uav_segment(task, mu, alloc, rates, compute, tx_power_user_w);
  m.sat = sat_segment(task, mu, alloc, rates, compute, tx_power_uav_w);
  m.tail = tail_segment(task, mu, alloc, rates, compute, tx_power_sat_w, target);

  const Scalar chain_uav = m.uav.tx_time + m.uav.comp_time;
  const Scalar chain_sat = m.uav.tx_time + m.sat.tx_time + m.sat.comp_time;
  const Scalar chain_tail = m.uav.tx_time + m.sat.tx_time + m.tail.tx_time + m.tail.comp_time;
  m.total_latency = std::max({m.local_time, chain_uav, chain_sat, chain_tail});
  m.total_energy = m.local_energy + m.uav.tx_energy + m.uav.comp_energy + m.sat.tx_energy +
                   m.sat.comp_energy + m.tail.tx_energy + m.tail.comp_energy;
  return m;
}

inline const char* to_string(TailTarget t) {
  switch (t) {
    case TailTarget::none: return "none";
    case TailTarget::isl_satellite: return "isl";
    case TailTarget::cloud: return "cloud";
  }
  return "?";
}

/// One CSV row per task for audit trails.
inline const char* task_metrics_csv_header() {
  return "local_time,local_energy,uav_tx_time,uav_tx_energy,uav_comp_time,uav_comp_energy,"
         "sat_tx_time,sat_tx_energy,sat_comp_time,sat_comp_energy,"
         "tail_tx_time,tail_tx_energy,tail_comp_time,tail_comp_energy,"
         "target,total_latency,total_energy";
}

template <typename Scalar>
void write_csv_row(std::ostream& out, const TaskMetrics<Scalar>& m) {
  auto seg = [&out](const SegmentCost<Scalar>& s) {
    out << s.tx_time << "," << s.tx_energy << "," << s.comp_time << "," << s.comp_energy << ",";
  };
  out.precision(17);
  out << m.local_time << "," << m.local_energy << ",";
  seg(m.uav);
  seg(m.sat);
  seg(m.tail);
  out << to_string(m.target) << "," << m.total_latency << "," << m.total_energy << "\n";
}

}  // namespace sagmec
