#include "stac/rl/config.hpp"

namespace stac::rl {

Algo parse_algo(const std::string& s) {
  if (s == "AC" || s == "ac") return Algo::AC;
  if (s == "DDPG" || s == "ddpg") return Algo::DDPG;
  if (s == "SAC" || s == "sac") return Algo::SAC;
  throw ConfigError("unknown algorithm '" + s + "'");
}

const char* algo_name(Algo a) {
  switch (a) {
    case Algo::AC: return "AC";
    case Algo::DDPG: return "DDPG";
    case Algo::SAC: return "SAC";
  }
  return "?";
}

namespace {

void need(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

}  // namespace

void AlgoConfig::validate() const {
  if (stackelberg && algo == Algo::AC && leader == LeaderRole::Critic)
    throw ConfigError("critic-as-leader is not defined for on-policy AC");
  need(lambda >= 0.0, "lambda must be nonnegative");
  need(cg_iters >= 1, "cg_iters must be at least 1");
  need(cg_tol >= 0.0, "cg_tol must be nonnegative");
  need(unroll_m >= 1, "unroll_m must be at least 1");
  need(gamma >= 0.0 && gamma <= 1.0, "gamma must lie in [0, 1]");
  need(gae_lambda >= 0.0 && gae_lambda <= 1.0, "gae_lambda must lie in [0, 1]");
  need(eta >= 0.0, "eta must be nonnegative");
  need(polyak >= 0.0 && polyak <= 1.0, "polyak must lie in [0, 1]");
  need(batch_size > 0, "batch_size must be positive");
  need(steps_per_epoch > 0, "steps_per_epoch must be positive");
  need(lr_actor > 0.0 && lr_critic > 0.0, "learning rates must be positive");
  need(!actor_hidden.empty() && !critic_hidden.empty(), "networks need a hidden layer");
  for (auto w : actor_hidden) need(w > 0, "hidden widths must be positive");
  for (auto w : critic_hidden) need(w > 0, "hidden widths must be positive");
  need(replay_capacity > 0, "replay_capacity must be positive");
  need(update_every > 0, "update_every must be positive");
  need(act_noise >= 0.0, "act_noise must be nonnegative");
  need(eval_every > 0 && eval_episodes > 0, "evaluation needs positive period and episodes");
}

}  // namespace stac::rl
