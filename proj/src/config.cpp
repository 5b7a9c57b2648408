#include "sagmec/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "sagmec/checkpoint.hpp"
#include "sagmec/units.hpp"

namespace sagmec {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  (void)ec;
  return std::string(buf, ptr);
}

double parse_double(const std::string& s) {
  size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("trailing characters");
  return v;
}

long long parse_int(const std::string& s) {
  size_t pos = 0;
  const long long v = std::stoll(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("trailing characters");
  return v;
}

bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw std::invalid_argument("expected true/false");
}

template <typename T, typename Parse>
std::vector<T> parse_list(const std::string& s, Parse parse) {
  std::vector<T> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    if (!tok.empty()) out.push_back(parse(tok));
  }
  return out;
}

struct Entry {
  std::string key;
  std::function<std::string(const LoadedConfig&)> get;
  std::function<void(LoadedConfig&, const std::string&)> set;
};

std::vector<Entry> registry() {
  std::vector<Entry> r;
  auto num = [&r](const std::string& key, auto member) {
    r.push_back({key, [member](const LoadedConfig& c) { return format_double(*member(const_cast<LoadedConfig&>(c))); },
                 [member](LoadedConfig& c, const std::string& v) { *member(c) = parse_double(v); }});
  };
  auto integer = [&r](const std::string& key, auto member) {
    r.push_back({key,
                 [member](const LoadedConfig& c) {
                   return std::to_string(*member(const_cast<LoadedConfig&>(c)));
                 },
                 [member](LoadedConfig& c, const std::string& v) {
                   *member(c) = static_cast<std::remove_reference_t<decltype(*member(c))>>(parse_int(v));
                 }});
  };
  auto boolean = [&r](const std::string& key, auto member) {
    r.push_back({key,
                 [member](const LoadedConfig& c) {
                   return *member(const_cast<LoadedConfig&>(c)) ? std::string("true") : std::string("false");
                 },
                 [member](LoadedConfig& c, const std::string& v) { *member(c) = parse_bool(v); }});
  };
  auto text = [&r](const std::string& key, auto member) {
    r.push_back({key, [member](const LoadedConfig& c) { return *member(const_cast<LoadedConfig&>(c)); },
                 [member](LoadedConfig& c, const std::string& v) { *member(c) = v; }});
  };

#define FIELD(expr) [](auto& c) { return &(expr); }

  integer("scenario.counts.users", FIELD(c.scenario.counts.users));
  integer("scenario.counts.uavs", FIELD(c.scenario.counts.uavs));
  integer("scenario.counts.sats", FIELD(c.scenario.counts.sats));
  integer("scenario.counts.clouds", FIELD(c.scenario.counts.clouds));
  integer("scenario.counts.tasks_per_user", FIELD(c.scenario.counts.tasks_per_user));

  num("scenario.geo.earth_radius_m", FIELD(c.scenario.geo.earth_radius_m));
  num("scenario.geo.orbit_height_m", FIELD(c.scenario.geo.orbit_height_m));
  r.push_back({"scenario.geo.min_elevation_deg",
               [](const LoadedConfig& c) {
                 return format_double(snap_decimal(rad_to_deg(c.scenario.geo.min_elevation_rad)));
               },
               [](LoadedConfig& c, const std::string& v) {
                 c.scenario.geo.min_elevation_rad = deg_to_rad(parse_double(v));
               }});
  num("scenario.geo.orbital_speed_mps", FIELD(c.scenario.geo.orbital_speed_mps));
  num("scenario.geo.light_speed_mps", FIELD(c.scenario.geo.light_speed_mps));

  num("scenario.rf.rician_factor", FIELD(c.scenario.rf.rician_factor));
  num("scenario.rf.rician_factor_sat_cloud", FIELD(c.scenario.rf.rician_factor_sat_cloud));
  num("scenario.rf.pathloss_los", FIELD(c.scenario.rf.pathloss_los));
  num("scenario.rf.pathloss_nlos", FIELD(c.scenario.rf.pathloss_nlos));
  num("scenario.rf.tx_power_user_w", FIELD(c.scenario.rf.tx_power_user_w));
  num("scenario.rf.tx_power_uav_w", FIELD(c.scenario.rf.tx_power_uav_w));
  num("scenario.rf.tx_power_sat_w", FIELD(c.scenario.rf.tx_power_sat_w));
  r.push_back({"scenario.rf.noise_dbm",
               [](const LoadedConfig& c) {
                 return format_double(snap_decimal(watts_to_dbm(c.scenario.rf.noise_power_w)));
               },
               [](LoadedConfig& c, const std::string& v) {
                 c.scenario.rf.noise_power_w = dbm_to_watts(parse_double(v));
               }});
  num("scenario.rf.bandwidth_user_uav_hz", FIELD(c.scenario.rf.bandwidth_user_uav_hz));
  num("scenario.rf.bandwidth_uav_sat_hz", FIELD(c.scenario.rf.bandwidth_uav_sat_hz));
  num("scenario.rf.bandwidth_isl_hz", FIELD(c.scenario.rf.bandwidth_isl_hz));
  num("scenario.rf.bandwidth_sat_cloud_hz", FIELD(c.scenario.rf.bandwidth_sat_cloud_hz));
  r.push_back({"scenario.rf.beam_gain_db",
               [](const LoadedConfig& c) {
                 return format_double(snap_decimal(linear_to_db(c.scenario.rf.beam_gain)));
               },
               [](LoadedConfig& c, const std::string& v) {
                 c.scenario.rf.beam_gain = db_to_linear(parse_double(v));
               }});
  num("scenario.rf.carrier_freq_sat_hz", FIELD(c.scenario.rf.carrier_freq_sat_hz));
  num("scenario.rf.wavelength_m", FIELD(c.scenario.rf.wavelength_m));
  num("scenario.rf.boltzmann", FIELD(c.scenario.rf.boltzmann));
  num("scenario.rf.thermal_noise_k", FIELD(c.scenario.rf.thermal_noise_k));
  num("scenario.rf.isl_peak_gain", FIELD(c.scenario.rf.isl_peak_gain));
  num("scenario.rf.max_doppler_hz", FIELD(c.scenario.rf.max_doppler_hz));

  num("scenario.compute.energy_factor", FIELD(c.scenario.compute.energy_factor));
  num("scenario.compute.overhead_factor", FIELD(c.scenario.compute.overhead_factor));
  num("scenario.compute.f_user_hz", FIELD(c.scenario.compute.f_user_hz));
  num("scenario.compute.f_uav_max_hz", FIELD(c.scenario.compute.f_uav_max_hz));
  num("scenario.compute.f_sat_max_hz", FIELD(c.scenario.compute.f_sat_max_hz));
  num("scenario.compute.f_cloud_max_hz", FIELD(c.scenario.compute.f_cloud_max_hz));

  num("scenario.tasks.size_min_bits", FIELD(c.scenario.tasks.size_min_bits));
  num("scenario.tasks.size_max_bits", FIELD(c.scenario.tasks.size_max_bits));
  num("scenario.tasks.cpu_cycles", FIELD(c.scenario.tasks.cpu_cycles));
  num("scenario.tasks.edge_prob", FIELD(c.scenario.tasks.edge_prob));

  num("scenario.placement.user_area_m", FIELD(c.scenario.placement.user_area_m));
  num("scenario.placement.uav_init_height_m", FIELD(c.scenario.placement.uav_init_height_m));
  num("scenario.placement.sat_spacing_min_m", FIELD(c.scenario.placement.sat_spacing_min_m));
  num("scenario.placement.sat_spacing_max_m", FIELD(c.scenario.placement.sat_spacing_max_m));
  num("scenario.placement.cloud_spacing_min_m", FIELD(c.scenario.placement.cloud_spacing_min_m));
  num("scenario.placement.cloud_spacing_max_m", FIELD(c.scenario.placement.cloud_spacing_max_m));

  num("scenario.box.x_min", FIELD(c.scenario.box.x_min));
  num("scenario.box.x_max", FIELD(c.scenario.box.x_max));
  num("scenario.box.y_min", FIELD(c.scenario.box.y_min));
  num("scenario.box.y_max", FIELD(c.scenario.box.y_max));
  num("scenario.box.z_min", FIELD(c.scenario.box.z_min));
  num("scenario.box.z_max", FIELD(c.scenario.box.z_max));

  num("scenario.thresholds.t_max_s", FIELD(c.scenario.t_max_s));
  num("scenario.thresholds.e_max_j", FIELD(c.scenario.e_max_j));
  num("scenario.uav.max_step_m", FIELD(c.scenario.uav_max_step_m));
  num("scenario.slot_s", FIELD(c.scenario.slot_s));
  integer("scenario.seed", FIELD(c.scenario.seed));

  boolean("env.freeze_channels", FIELD(c.scenario.freeze_channels));
  boolean("env.fast_forward", FIELD(c.scenario.fast_forward));
  boolean("env.dense_reward", FIELD(c.scenario.dense_reward));
  num("env.reward_scale", FIELD(c.scenario.reward_scale));
  integer("env.max_slots", FIELD(c.scenario.max_slots));

  r.push_back({"train.hidden",
               [](const LoadedConfig& c) {
                 std::string s;
                 for (size_t i = 0; i < c.train.hidden.size(); ++i)
                   s += (i ? "," : "") + std::to_string(c.train.hidden[i]);
                 return s;
               },
               [](LoadedConfig& c, const std::string& v) {
                 c.train.hidden = parse_list<int>(v, [](const std::string& t) {
                   return static_cast<int>(parse_int(t));
                 });
               }});
  num("train.lr", FIELD(c.train.lr));
  integer("train.batch", FIELD(c.train.batch));
  integer("train.replay_capacity", FIELD(c.train.replay_capacity));
  num("train.soft_update", FIELD(c.train.soft_update_rate));
  num("train.alpha", FIELD(c.train.alpha));
  num("train.discount", FIELD(c.train.discount));
  num("train.assist_share", FIELD(c.train.assist_share));
  boolean("train.assist_enabled", FIELD(c.train.assist_enabled));
  num("train.mpo.chi_discrete", FIELD(c.train.mpo.chi_discrete));
  num("train.mpo.chi_continuous", FIELD(c.train.mpo.chi_continuous));
  num("train.mpo.kl_epsilon", FIELD(c.train.mpo.kl_epsilon));
  integer("train.mpo.candidates", FIELD(c.train.mpo.candidates));
  integer("train.mpo.fit_steps", FIELD(c.train.mpo.fit_steps));
  num("train.mpo.fit_lr", FIELD(c.train.mpo.fit_lr));
  num("train.mpo.explore_log_std_floor", FIELD(c.train.mpo.explore_log_std_floor));
  integer("train.updates_per_episode", FIELD(c.train.updates_per_episode));
  integer("train.warmup_transitions", FIELD(c.train.warmup_transitions));
  integer("train.episodes", FIELD(c.train.episodes));
  integer("train.eval_interval", FIELD(c.train.eval_interval));
  integer("train.eval_episodes", FIELD(c.train.eval_episodes));
  integer("train.rollout_batch", FIELD(c.train.rollout_batch));
  integer("train.threads", FIELD(c.train.threads));
  boolean("train.fixed_instance", FIELD(c.train.fixed_instance));
  integer("train.seed", FIELD(c.train.seed));
  num("train.policy_final_scale", FIELD(c.train.policy_final_scale));

  r.push_back({"run.objective",
               [](const LoadedConfig& c) { return std::string(to_string(c.run.objective)); },
               [](LoadedConfig& c, const std::string& v) {
                 if (v == "energy" || v == "p1" || v == "P1")
                   c.run.objective = Objective::energy;
                 else if (v == "latency" || v == "p2" || v == "P2")
                   c.run.objective = Objective::latency;
                 else
                   throw std::invalid_argument("expected energy|latency");
               }});
  text("run.mode", FIELD(c.run.mode));
  r.push_back({"run.seeds",
               [](const LoadedConfig& c) {
                 std::string s;
                 for (size_t i = 0; i < c.run.seeds.size(); ++i)
                   s += (i ? "," : "") + std::to_string(c.run.seeds[i]);
                 return s;
               },
               [](LoadedConfig& c, const std::string& v) {
                 c.run.seeds = parse_list<std::uint64_t>(v, [](const std::string& t) {
                   return static_cast<std::uint64_t>(parse_int(t));
                 });
                 if (c.run.seeds.empty()) throw std::invalid_argument("need at least one seed");
               }});
  integer("run.episodes", FIELD(c.run.episodes));
  text("run.out_dir", FIELD(c.run.out_dir));
  text("run.policy", FIELD(c.run.policy));
  text("run.checkpoint", FIELD(c.run.checkpoint));
  text("run.sweep_param", FIELD(c.run.sweep_param));
  r.push_back({"run.sweep_values",
               [](const LoadedConfig& c) {
                 std::string s;
                 for (size_t i = 0; i < c.run.sweep_values.size(); ++i)
                   s += (i ? "," : "") + c.run.sweep_values[i];
                 return s;
               },
               [](LoadedConfig& c, const std::string& v) {
                 c.run.sweep_values = parse_list<std::string>(v, [](const std::string& t) { return t; });
               }});
  integer("run.threads", FIELD(c.run.threads));
  num("run.grid.mu_step", FIELD(c.run.grid.mu_step));
  integer("run.grid.alloc_levels", FIELD(c.run.grid.alloc_levels));
  boolean("run.grid.per_task", FIELD(c.run.grid.per_task));
  integer("run.grid.max_plans", FIELD(c.run.grid.max_plans));
#undef FIELD
  return r;
}

void finalize(LoadedConfig& cfg, std::vector<std::string>& issues) {
  cfg.scenario.rf.light_speed_mps = cfg.scenario.geo.light_speed_mps;
  try {
    cfg.scenario.validate();
  } catch (const ValidationError& e) {
    issues.insert(issues.end(), e.issues.begin(), e.issues.end());
  }
  try {
    cfg.train.validate();
  } catch (const std::exception& e) {
    issues.emplace_back(e.what());
  }
  static const char* kModes[] = {"simulate", "train", "evaluate", "oracle", "sweep", "report"};
  bool mode_ok = false;
  for (const char* m : kModes) mode_ok = mode_ok || cfg.run.mode == m;
  if (!mode_ok) issues.emplace_back("run.mode: expected simulate|train|evaluate|oracle|sweep|report");
  if (cfg.run.policy != "random" && cfg.run.policy != "local" && cfg.run.policy != "greedy" &&
      cfg.run.policy != "dmsach")
    issues.emplace_back("run.policy: expected random|local|greedy|dmsach");
  if (cfg.run.episodes < 0) issues.emplace_back("run.episodes: must be nonnegative");
}

}  // namespace

LoadedConfig config_defaults() {
  LoadedConfig cfg;
  cfg.scenario.rf.light_speed_mps = cfg.scenario.geo.light_speed_mps;
  return cfg;
}

LoadedConfig parse_config(const std::string& text) {
  LoadedConfig cfg = config_defaults();
  const std::vector<Entry> reg = registry();
  std::map<std::string, const Entry*> by_key;
  for (const Entry& e : reg) by_key[e.key] = &e;

  std::vector<std::string> issues;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("parse error at line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = by_key.find(key);
    if (it == by_key.end()) {
      issues.push_back(key + ": unknown key");
      continue;
    }
    try {
      it->second->set(cfg, value);
    } catch (const std::exception& e) {
      issues.push_back(key + ": invalid value '" + value + "' (" + e.what() + ")");
    }
  }
  finalize(cfg, issues);
  if (!issues.empty()) throw ValidationError(issues);
  return cfg;
}

LoadedConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const LoadedConfig& cfg) {
  std::ostringstream out;
  for (const Entry& e : registry()) out << e.key << " = " << e.get(cfg) << "\n";
  return out.str();
}

std::uint64_t config_hash(const LoadedConfig& cfg) {
  std::ostringstream out;
  for (const Entry& e : registry())
    if (e.key != "run.out_dir") out << e.key << " = " << e.get(cfg) << "\n";
  return fnv1a(out.str());
}

void write_config(const std::string& path, const LoadedConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config file: " + path);
  out << serialize_config(cfg);
}

void apply_override(LoadedConfig& cfg, const std::string& key, const std::string& value) {
  for (const Entry& e : registry()) {
    if (e.key != key) continue;
    e.set(cfg, value);
    std::vector<std::string> issues;
    finalize(cfg, issues);
    if (!issues.empty()) throw ValidationError(issues);
    return;
  }
  throw ValidationError({key + ": unknown key"});
}

}  // namespace sagmec
