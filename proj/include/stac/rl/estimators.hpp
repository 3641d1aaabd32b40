#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "stac/diff/derivatives.hpp"
#include "stac/env/env.hpp"
#include "stac/game/game.hpp"
#include "stac/nets/nets.hpp"

namespace stac::rl {

using diff::ParamVector;
using diff::Tape;
using diff::Var;
using env::Trajectory;
using env::Transition;

struct GradEstimate {
  ParamVector direction;
  std::size_t batch = 0;
  game::Diagnostics diag;
};

/// Differentiable log pi_theta(a|s) for a stored transition.
struct PolicyModel {
  std::size_t dim = 0;
  std::function<Var(Tape&, std::span<const Var>, const Transition&)> log_prob;
};

/// V_w(s) or Q_w(s, a) for a stored transition.
struct CriticModel {
  std::size_t dim = 0;
  std::function<Var(Tape&, std::span<const Var>, const Transition&)> eval;
};

PolicyModel policy_model(const nets::Policy& p);
CriticModel value_model(const nets::Critic& c);
/// First Q head.
CriticModel q_model(const nets::Critic& c);

/// G_t = sum_{t' >= t} gamma^{t'-t} r_t' (+ gamma^{T-t} bootstrap).
std::vector<double> mc_returns(const Trajectory& tau, double gamma, double bootstrap = 0.0);

/// `values` holds V(s_0..s_{T-1}); `bootstrap` is V(s_T), ignored when the
/// trajectory ends in a terminal state.
std::vector<double> gae_advantages(const Trajectory& tau, std::span<const double> values,
                                   double bootstrap, double gamma, double gae_lambda);

/// Per-trajectory, per-step numbers (returns, advantages, exact values...).
using StepValues = std::vector<std::vector<double>>;

/// Mean over all steps of grad log pi(a_t|s_t) * weights[i][t].
GradEstimate policy_gradient(const std::vector<Trajectory>& batch, const PolicyModel& pi,
                             std::span<const double> theta, const StepValues& weights);

/// Objective over (theta, w) whose theta-gradient is the Theorem 1 estimate,
/// averaged over trajectories. `targets` stands in for Q^pi(s_t, a_t); empty
/// means Monte Carlo returns. Values are not meaningful, derivatives are.
diff::Objective thm1_objective(const std::vector<Trajectory>& batch, const PolicyModel& pi,
                               const CriticModel& q, double gamma, StepValues targets = {});

/// Same for the Proposition 1 (state-value critic) form. `start_values[i]`
/// stands in for V^pi(s_0) of trajectory i; by default targets[i][0].
diff::Objective prop1_objective(const std::vector<Trajectory>& batch, const PolicyModel& pi,
                                const CriticModel& v, double gamma, StepValues targets = {},
                                std::vector<double> start_values = {});

GradEstimate thm1_grad_theta_L(const std::vector<Trajectory>& batch, const PolicyModel& pi,
                               std::span<const double> theta, const CriticModel& q,
                               std::span<const double> w, double gamma,
                               StepValues targets = {});

GradEstimate prop1_grad_theta_L(const std::vector<Trajectory>& batch, const PolicyModel& pi,
                                std::span<const double> theta, const CriticModel& v,
                                std::span<const double> w, double gamma,
                                StepValues targets = {}, std::vector<double> start_values = {});

/// grad_w <estimate of grad_theta L, q> on the same batch; |q| = |theta|.
std::vector<double> mixed_grad_w_of_theta_L(const diff::Objective& estimator,
                                            std::span<const double> theta,
                                            std::span<const double> w,
                                            std::span<const double> q);

}  // namespace stac::rl
