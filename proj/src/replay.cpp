#include "sagmec/replay.hpp"

#include <stdexcept>

namespace sagmec {

ReplayStore::ReplayStore(std::size_t capacity, std::uint64_t sampler_seed)
    : capacity_env_(capacity), capacity_assist_(std::max<std::size_t>(1, capacity / 4)),
      rng_(sampler_seed) {
  if (capacity == 0) throw std::invalid_argument("ReplayStore: capacity must be positive");
}

void ReplayStore::push(Transition t) {
  auto& pool = t.assist ? assist_ : env_;
  const std::size_t cap = t.assist ? capacity_assist_ : capacity_env_;
  pool.push_back(std::move(t));
  while (pool.size() > cap) pool.pop_front();
}

std::vector<const Transition*> ReplayStore::sample(int batch, double assist_share) {
  if (batch <= 0) throw std::invalid_argument("ReplayStore::sample: batch must be positive");
  if (env_.empty()) throw std::logic_error("ReplayStore::sample: no environment transitions stored");

  int want_assist = static_cast<int>(batch * assist_share);
  if (assist_.empty()) want_assist = 0;
  const int want_env = batch - want_assist;

  std::vector<const Transition*> out;
  out.reserve(static_cast<std::size_t>(batch));
  std::uniform_int_distribution<std::size_t> env_pick(0, env_.size() - 1);
  for (int i = 0; i < want_env; ++i) out.push_back(&env_[env_pick(rng_)]);
  if (want_assist > 0) {
    std::uniform_int_distribution<std::size_t> assist_pick(0, assist_.size() - 1);
    for (int i = 0; i < want_assist; ++i) out.push_back(&assist_[assist_pick(rng_)]);
  }
  return out;
}

}  // namespace sagmec
