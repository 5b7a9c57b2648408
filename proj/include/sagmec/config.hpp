#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sagmec/learner.hpp"
#include "sagmec/oracle.hpp"
#include "sagmec/scenario.hpp"

namespace sagmec {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Run orchestration knobs; everything here is also overridable from the CLI.
struct RunConfig {
  Objective objective = Objective::energy;
  std::string mode = "simulate";  // simulate | train | evaluate | oracle | sweep | report
  std::vector<std::uint64_t> seeds{1};
  int episodes = 100;
  std::string out_dir = "runs";
  std::string policy = "local";  // random | local | greedy (simulate, sweep)
  std::string checkpoint;        // evaluate
  std::string sweep_param;
  std::vector<std::string> sweep_values;
  int threads = 1;
  GridSpec grid;
};

struct LoadedConfig {
  Scenario scenario;
  TrainParams train;
  RunConfig run;
};

LoadedConfig config_defaults();

/// Parses the dotted key=value format; '#' starts a comment. Unknown keys and
/// invalid values are all collected into one ValidationError.
LoadedConfig parse_config(const std::string& text);
LoadedConfig load_config(const std::string& path);

/// Canonical text: every known key in registry order, shortest round-trip
/// number formatting. Reading it back reproduces the config exactly.
std::string serialize_config(const LoadedConfig& cfg);

/// Hash over the canonical text minus the output directory, so reruns into
/// different folders keep the same identity.
std::uint64_t config_hash(const LoadedConfig& cfg);

void write_config(const std::string& path, const LoadedConfig& cfg);

/// Applies one dotted-key override and revalidates.
void apply_override(LoadedConfig& cfg, const std::string& key, const std::string& value);

}  // namespace sagmec
