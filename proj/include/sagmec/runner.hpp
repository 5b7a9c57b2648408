#pragma once

#include <string>

#include "sagmec/config.hpp"

namespace sagmec {

std::string run_id_for(const LoadedConfig& cfg);

/// Root folder runs land in: run.out_dir, unless SAGMEC_OUT_ROOT is set.
std::string output_root(const LoadedConfig& cfg);

/// Executes cfg.run.mode end to end. Returns the run directory written.
/// Throws on any error; the CLI turns that into a nonzero exit.
std::string run(const LoadedConfig& cfg);

}  // namespace sagmec
