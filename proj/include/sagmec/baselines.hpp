#pragma once

#include <random>

#include "sagmec/environment.hpp"

namespace sagmec {

/// Uniform over unmasked discrete arms and over the continuous boxes.
HybridAction random_policy(const Environment& env, const ActionMask& mask, std::mt19937_64& rng);

/// Everything computed on the ground users (mu_user = 1, first valid pairing,
/// no motion).
HybridAction local_only_policy(const Environment& env);

/// One-step lookahead: each ready task picks, over a coarse grid of fraction
/// triples and allocation levels, the chain minimizing its marginal objective.
HybridAction greedy_policy(const Environment& env, const ActionMask& mask);

/// Runs one full episode under a fixed policy functor; returns (energy,
/// latency, completed, violations).
struct EpisodeOutcome {
  double energy_j = 0;
  double latency_s = 0;
  double reward = 0;
  bool completed = false;
  int steps = 0;
  std::vector<Violation> violations;
};

template <typename PolicyFn>
EpisodeOutcome play_episode(Environment& env, std::uint64_t seed, PolicyFn&& policy) {
  env.reset(seed);
  EpisodeOutcome out;
  while (true) {
    const HybridAction a = policy(env);
    const StepResult res = env.step(a);
    out.reward += res.reward;
    ++out.steps;
    for (const Violation& v : res.info.violations) out.violations.push_back(v);
    if (res.done) break;
  }
  out.energy_j = env.total_energy_j();
  out.latency_s = env.total_latency_s();
  out.completed = env.all_done();
  return out;
}

}  // namespace sagmec
