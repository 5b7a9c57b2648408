#pragma once

#include <cstdint>
#include <string>

#include "sagmec/learner.hpp"

namespace sagmec {

/// FNV-1a over a canonical string; used to tie checkpoints and run
/// directories to the exact configuration that produced them.
std::uint64_t fnv1a(const std::string& text);

void save_checkpoint(const std::string& path, const LearnerBundle& bundle,
                     std::uint64_t config_hash);

struct CheckpointInfo {
  std::uint64_t config_hash = 0;
};

/// Loads weights and optimizer state into a bundle built for the same
/// environment shape. Throws on magic/version/shape mismatch.
CheckpointInfo load_checkpoint(const std::string& path, LearnerBundle& bundle);

}  // namespace sagmec
