#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stac/diff/param_vector.hpp"
#include "stac/env/env.hpp"
#include "stac/nets/nets.hpp"
#include "stac/rl/config.hpp"

namespace stac::rl {

struct RunRecord {
  std::size_t step = 0;
  double eval_return_mean = 0.0;
  double eval_return_std = 0.0;
  double leader_grad_norm = 0.0;
  double follower_grad_norm = 0.0;
  double correction_norm = 0.0;
  double cg_residual = 0.0;
  int fallback = 0;  // any fallback since the previous record
  double wall_seconds = 0.0;
};

struct TrainResult {
  std::vector<RunRecord> records;
  diff::ParamVector actor;
  diff::ParamVector critic;
  std::size_t updates = 0;
  std::size_t stackelberg_updates = 0;
  std::size_t fallback_updates = 0;
};

struct TrainHooks {
  std::function<void(const RunRecord&)> on_record;
  /// Called after every update with the new parameters.
  std::function<void(std::size_t, const diff::ParamVector&, const diff::ParamVector&)> on_update;
  /// Written periodically and on abort (nets snapshot format).
  std::string checkpoint_path;
  std::size_t max_updates = 0;  // 0: no limit
};

class TrainingAborted : public std::runtime_error {
 public:
  TrainingAborted(std::size_t step, const std::string& why, std::vector<RunRecord> records);
  std::size_t step() const { return step_; }
  const std::vector<RunRecord>& records() const { return records_; }

 private:
  std::size_t step_;
  std::vector<RunRecord> records_;
};

/// Independent RNG stream `k` derived from a run seed (0: environment
/// resets are seeded with the run seed itself; 1: action sampling; 2: update
/// noise; 3: replay sampling; 4: evaluation episodes).
std::uint64_t stream_seed(std::uint64_t seed, unsigned k);

/// Actor and critic shapes for an environment: categorical or
/// gaussian-tanh actor for AC, deterministic for DDPG, gaussian-tanh with
/// twin Q for SAC.
nets::Policy make_policy(const env::MDPSpec& spec, const AlgoConfig& cfg);
nets::Critic make_critic(const env::MDPSpec& spec, const AlgoConfig& cfg);

/// Mean and population std of `episodes` returns of the deterministic /
/// mean-action policy.
std::pair<double, double> evaluate_policy(env::Env& e, const AlgoConfig& cfg,
                                          const diff::ParamVector& actor, std::size_t episodes);

TrainResult train(const env::Env& prototype, const AlgoConfig& cfg, std::size_t total_steps,
                  const TrainHooks& hooks = {});

}  // namespace stac::rl
