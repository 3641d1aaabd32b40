#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "stac/nets/nets.hpp"

namespace stac::rl {

enum class Algo { AC, DDPG, SAC };
enum class LeaderRole { Actor, Critic };

Algo parse_algo(const std::string& s);
const char* algo_name(Algo a);

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct AlgoConfig {
  Algo algo = Algo::AC;
  bool stackelberg = false;
  LeaderRole leader = LeaderRole::Actor;  // ignored unless stackelberg
  double lambda = 0.0;
  int cg_iters = 10;
  double cg_tol = 1e-10;
  int unroll_m = 1;

  double gamma = 0.99;
  double gae_lambda = 0.97;
  double eta = 0.2;      // SAC entropy coefficient
  double polyak = 0.995;
  std::size_t batch_size = 100;
  std::size_t steps_per_epoch = 4000;  // AC
  double lr_actor = 1e-3;
  double lr_critic = 1e-3;
  std::uint64_t seed = 0;

  std::vector<std::size_t> actor_hidden{64, 32};
  std::vector<std::size_t> critic_hidden{64, 32};
  nets::Activation activation = nets::Activation::Tanh;

  // Off-policy data collection.
  std::size_t replay_capacity = 1'000'000;
  std::size_t start_steps = 10'000;  // uniform random actions before this
  std::size_t update_after = 1'000;
  std::size_t update_every = 50;
  double act_noise = 0.1;  // DDPG exploration

  std::size_t eval_every = 10'000;
  std::size_t eval_episodes = 10;
  std::size_t checkpoint_every = 0;  // 0: only at the end and on abort
  /// Wall-clock time is recorded only when set; records are otherwise
  /// byte-identical across runs.
  bool wall_clock = false;

  /// Throws ConfigError.
  void validate() const;
};

}  // namespace stac::rl
