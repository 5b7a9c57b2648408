#include "sagmec/scenario.hpp"

#include <sstream>

namespace sagmec {

namespace {
std::string join(const std::vector<std::string>& issues) {
  std::ostringstream out;
  out << "invalid scenario:";
  for (const auto& s : issues) out << "\n  " << s;
  return out.str();
}
}  // namespace

ValidationError::ValidationError(const std::vector<std::string>& iss)
    : std::runtime_error(join(iss)), issues(iss) {}

void Scenario::validate() const {
  std::vector<std::string> issues;
  auto require = [&](bool ok, const char* key, const char* why) {
    if (!ok) issues.emplace_back(std::string(key) + ": " + why);
  };

  require(counts.users >= 1, "scenario.counts.users", "must be >= 1");
  require(counts.uavs >= 1, "scenario.counts.uavs", "must be >= 1");
  require(counts.sats >= 1, "scenario.counts.sats", "must be >= 1");
  require(counts.clouds >= 1, "scenario.counts.clouds", "must be >= 1");
  require(counts.tasks_per_user >= 1, "scenario.counts.tasks_per_user", "must be >= 1");
  require(t_max_s > 0, "scenario.thresholds.t_max_s", "must be positive");
  require(e_max_j > 0, "scenario.thresholds.e_max_j", "must be positive");
  require(box.x_min < box.x_max && box.y_min < box.y_max && box.z_min <= box.z_max,
          "scenario.box", "flight box must be nonempty");
  require(uav_max_step_m >= 0, "scenario.uav.max_step_m", "must be nonnegative");
  require(slot_s > 0, "scenario.slot_s", "must be positive");
  require(tasks.size_min_bits > 0 && tasks.size_max_bits >= tasks.size_min_bits,
          "scenario.tasks", "size range must be nonempty and positive");
  require(tasks.cpu_cycles > 0, "scenario.tasks.cpu_cycles", "must be positive");
  require(tasks.edge_prob >= 0 && tasks.edge_prob <= 1, "scenario.tasks.edge_prob", "must lie in [0,1]");
  require(reward_scale > 0, "env.reward_scale", "must be positive");
  require(max_slots > 0, "env.max_slots", "must be positive");

  try {
    geo.validate();
  } catch (const std::exception& e) {
    issues.emplace_back(std::string("scenario.geo: ") + e.what());
  }
  try {
    rf.validate();
  } catch (const std::exception& e) {
    issues.emplace_back(std::string("scenario.rf: ") + e.what());
  }
  try {
    compute.validate();
  } catch (const std::exception& e) {
    issues.emplace_back(std::string("scenario.compute: ") + e.what());
  }

  if (!issues.empty()) throw ValidationError(issues);
}

}  // namespace sagmec
