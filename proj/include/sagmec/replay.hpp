#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <deque>
#include <random>
#include <vector>

#include "sagmec/distributions.hpp"

namespace sagmec {

/// One learner-side transition in canonical action space.
struct Transition {
  Eigen::VectorXd obs, next_obs;
  std::vector<int> arms;      // selected arm per head
  Eigen::VectorXd cont;       // tanh-squashed continuous action, [-1,1]^D
  double reward = 0;
  bool done = false;
  DiscreteMask mask;          // discrete availability at obs
  bool assist = false;        // decision-assist pair targeting one arm's Q
  int assist_head = -1;
  int assist_arm = -1;
};

/// Bounded FIFO with separate env/assist pools so batches can hold a fixed
/// assist share.
class ReplayStore {
 public:
  ReplayStore(std::size_t capacity, std::uint64_t sampler_seed);

  void push(Transition t);
  std::size_t size() const { return env_.size() + assist_.size(); }
  std::size_t env_size() const { return env_.size(); }
  std::size_t assist_size() const { return assist_.size(); }
  std::size_t capacity() const { return capacity_env_ + capacity_assist_; }

  /// assist_share in [0,1): fraction of the batch drawn from assist pairs
  /// (best effort when the assist pool is small).
  std::vector<const Transition*> sample(int batch, double assist_share);

 private:
  std::deque<Transition> env_, assist_;
  std::size_t capacity_env_, capacity_assist_;
  std::mt19937_64 rng_;
};

}  // namespace sagmec
