#include <doctest.h>

#include <cmath>

#include "sagmec/config.hpp"

using namespace sagmec;

TEST_CASE("empty config yields the shipped defaults") {
  const LoadedConfig cfg = parse_config("");
  CHECK(cfg.scenario.counts.users == 12);
  CHECK(cfg.scenario.counts.uavs == 3);
  CHECK(cfg.scenario.counts.sats == 5);
  CHECK(cfg.scenario.counts.clouds == 3);
  CHECK(cfg.scenario.counts.tasks_per_user == 10);
  CHECK(cfg.scenario.t_max_s == 50.0);
  CHECK(cfg.scenario.e_max_j == 400.0);
  CHECK(cfg.scenario.rf.tx_power_user_w == 0.1);
  CHECK(cfg.scenario.rf.tx_power_uav_w == 1.0);
  CHECK(cfg.scenario.rf.tx_power_sat_w == 1.0);
  CHECK(cfg.scenario.rf.noise_power_w == doctest::Approx(1e-13).epsilon(1e-12));
  CHECK(cfg.scenario.rf.beam_gain == doctest::Approx(316.2277660168).epsilon(1e-9));
  CHECK(cfg.scenario.geo.min_elevation_rad == doctest::Approx(40 * M_PI / 180).epsilon(1e-15));
  CHECK(cfg.scenario.compute.f_user_hz == 1e8);
  CHECK(cfg.scenario.compute.f_uav_max_hz == 5e8);
  CHECK(cfg.scenario.compute.f_sat_max_hz == 1e9);
  CHECK(cfg.scenario.compute.f_cloud_max_hz == 3e9);
  CHECK(cfg.scenario.tasks.cpu_cycles == 3e9);
  CHECK(cfg.train.discount == 0.99);
  // defaults match a default-constructed scenario field for field
  const LoadedConfig direct = config_defaults();
  CHECK(serialize_config(cfg) == serialize_config(direct));
}

TEST_CASE("invalid values are rejected with key paths") {
  CHECK_THROWS_AS(parse_config("scenario.counts.users = 0\n"), ValidationError);
  try {
    parse_config("scenario.counts.users = 0\nscenario.thresholds.t_max_s = -5\nbogus.key = 1\n");
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    // every invalid key is listed
    std::string all;
    for (const auto& issue : e.issues) all += issue + "\n";
    CHECK(all.find("scenario.counts.users") != std::string::npos);
    CHECK(all.find("scenario.thresholds.t_max_s") != std::string::npos);
    CHECK(all.find("bogus.key") != std::string::npos);
  }
}

TEST_CASE("syntax errors carry line numbers") {
  CHECK_THROWS_AS(parse_config("scenario.counts.users 12\n"), ParseError);
  try {
    parse_config("# fine\nwhat is this\n");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("round trip is the identity on the canonical form") {
  LoadedConfig cfg = parse_config(
      "scenario.counts.users = 3\n"
      "scenario.rf.noise_dbm = -96.5\n"
      "scenario.geo.min_elevation_deg = 35\n"
      "train.hidden = 64,64\n"
      "run.objective = latency\n");
  const std::string once = serialize_config(cfg);
  const LoadedConfig back = parse_config(once);
  CHECK(serialize_config(back) == once);
  CHECK(back.scenario.counts.users == 3);
  CHECK(back.train.hidden == std::vector<int>{64, 64});
  CHECK(back.run.objective == Objective::latency);
  CHECK(back.scenario.rf.noise_power_w == cfg.scenario.rf.noise_power_w);
  CHECK(back.scenario.geo.min_elevation_rad == cfg.scenario.geo.min_elevation_rad);
}

TEST_CASE("comments and whitespace are tolerated") {
  const LoadedConfig cfg = parse_config(
      "# header comment\n"
      "  scenario.counts.users = 4   # trailing comment\n"
      "\n"
      "scenario.slot_s=0.5\n");
  CHECK(cfg.scenario.counts.users == 4);
  CHECK(cfg.scenario.slot_s == 0.5);
}

TEST_CASE("config hash ignores the output directory") {
  LoadedConfig a = config_defaults();
  LoadedConfig b = config_defaults();
  b.run.out_dir = "elsewhere";
  CHECK(config_hash(a) == config_hash(b));
  b.scenario.counts.users = 2;
  CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("apply_override") {
  LoadedConfig cfg = config_defaults();
  apply_override(cfg, "scenario.counts.users", "6");
  CHECK(cfg.scenario.counts.users == 6);
  CHECK_THROWS_AS(apply_override(cfg, "nope", "1"), ValidationError);
  CHECK_THROWS_AS(apply_override(cfg, "scenario.counts.users", "0"), ValidationError);
}

TEST_CASE("objective aliases") {
  CHECK(parse_config("run.objective = p1\n").run.objective == Objective::energy);
  CHECK(parse_config("run.objective = p2\n").run.objective == Objective::latency);
}
