#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "stac/env/env.hpp"

namespace stac::rl {

/// Fixed-capacity ring of transitions with a seeded uniform sampler.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::uint64_t seed);

  void add(env::Transition t);
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return data_.size(); }
  const env::Transition& at(std::size_t i) const;

  /// Uniform with replacement over written slots. Throws on an empty buffer.
  std::vector<std::size_t> sample_indices(std::size_t batch);
  std::vector<env::Transition> sample(std::size_t batch);

 private:
  std::vector<env::Transition> data_;
  std::size_t next_ = 0;
  std::size_t size_ = 0;
  std::mt19937_64 rng_;
};

}  // namespace stac::rl
