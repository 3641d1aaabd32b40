#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "stac/diff/derivatives.hpp"
#include "stac/env/env.hpp"
#include "stac/game/game.hpp"
#include "stac/nets/nets.hpp"
#include "stac/rl/config.hpp"
#include "stac/rl/estimators.hpp"

namespace stac::rl {

/// Actor objective J (maximised over theta) and critic objective L
/// (minimised over w), both as functions of (theta, w) on a fixed batch.
struct ActorCritic {
  diff::Objective J;
  diff::Objective L;
  std::size_t d_theta = 0;
  std::size_t d_w = 0;

  game::TwoPlayerGame game() const;
};

/// J = mean Q_w(s, mu(s)); L = mean (Q_w(s,a) - r - gamma (1-done) Q0(s', mu(s')))^2.
/// The next action comes from the current actor, so L depends on theta.
ActorCritic ddpg_objectives(const std::vector<Transition>& batch, const nets::Policy& mu,
                            const nets::Critic& q, std::span<const double> q_target,
                            double gamma);

/// Twin-Q soft actor-critic objectives. Reparameterisation noise for a(s) and
/// a(s') is drawn from `rng` once, so the objectives are deterministic
/// functions of (theta, w). The target y is constant in w but not in theta.
ActorCritic sac_objectives(const std::vector<Transition>& batch, const nets::Policy& pi,
                           const nets::Critic& q2, std::span<const double> q_target,
                           double eta, double gamma, nets::Rng& rng);

/// On-policy batch for the state-value actor-critic.
struct OnPolicyBatch {
  std::vector<Trajectory> trajectories;
  StepValues advantages;  // normalised
  StepValues returns;     // reward-to-go, bootstrapped on cut trajectories
  double adv_scale = 1.0; // std of the raw advantages
  std::size_t steps = 0;
};

/// Fills returns and normalised GAE advantages using the numeric critic.
OnPolicyBatch make_on_policy_batch(std::vector<Trajectory> trajectories,
                                   const nets::Critic& v, std::span<const double> w,
                                   double gamma, double gae_lambda);

/// J: policy-gradient surrogate with normalised advantages plus
/// gamma (1-done) V_w(s_1) on each trajectory start, both scaled by
/// 1/adv_scale. L: mean squared error to the returns plus the Proposition 1
/// surrogate, so grad_theta L is the Proposition 1 estimate.
ActorCritic ac_objectives(const OnPolicyBatch& b, const nets::Policy& pi, const nets::Critic& v,
                          double gamma);

/// Leader direction per cfg (AL: theta, ascent on J; CL: w, descent on L),
/// in the leader's declared sense. Requires cfg.stackelberg.
GradEstimate total_derivative(const ActorCritic& ac, std::span<const double> theta,
                              std::span<const double> w, const AlgoConfig& cfg);

}  // namespace stac::rl
