#include "stac/rl/replay.hpp"

#include <stdexcept>

namespace stac::rl {

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::uint64_t seed) : rng_(seed) {
  if (capacity == 0) throw std::invalid_argument("ReplayBuffer: capacity must be positive");
  data_.resize(capacity);
}

void ReplayBuffer::add(env::Transition t) {
  data_[next_] = std::move(t);
  next_ = (next_ + 1) % data_.size();
  if (size_ < data_.size()) ++size_;
}

const env::Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= size_) throw std::out_of_range("ReplayBuffer: slot not written");
  return data_[i];
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t batch) {
  if (size_ == 0) throw std::logic_error("ReplayBuffer: sampling from an empty buffer");
  std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
  std::vector<std::size_t> idx(batch);
  for (auto& i : idx) i = pick(rng_);
  return idx;
}

std::vector<env::Transition> ReplayBuffer::sample(std::size_t batch) {
  std::vector<env::Transition> out;
  out.reserve(batch);
  for (auto i : sample_indices(batch)) out.push_back(data_[i]);
  return out;
}

}  // namespace stac::rl
