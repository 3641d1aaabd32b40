#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "stac/game/game.hpp"

namespace stac::examples {

/// One-step actor-critic game with reward R(a) = -a^2/5, actor a = theta and
/// linear critic Q_w(a) = w a. Actor J = w theta (max), critic
/// L = (w theta + theta^2/5)^2 (min). x1 = theta, x2 = w.
game::TwoPlayerGame motivating_game();

double motivating_actor(double theta, double w);
double motivating_critic(double theta, double w);

struct MotivatingPartials {
  double dj_dtheta = 0.0;
  double dj_dw = 0.0;
  double dl_dw = 0.0;
  double d2l_dw2 = 0.0;
  double d2l_dw_dtheta = 0.0;
};
MotivatingPartials motivating_partials(double theta, double w);

class SingularityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Closed-form total derivative of J with the critic as follower (ascent
/// sense): -w - 0.6 theta. Undefined at theta = 0.
double oracle_total_derivative(double theta, double w);

/// Entropy-regularised variant: a = tanh(theta + sigma eps) with the tanh
/// change of variables in log pi.
struct EntropicGame {
  double eta = 0.1;
  double sigma = 0.5;
  int mc_samples = 256;
};

/// Standard normal draws in antithetic pairs (eps, -eps); an odd count gets a
/// trailing zero. Deterministic in seed.
std::vector<double> entropic_noise(const EntropicGame& cfg, std::uint64_t seed);

/// Monte Carlo estimates (d theta of the actor objective, d w of the critic
/// loss) from one common sample set.
std::pair<double, double> entropic_actor_objective_grad(double theta, double w,
                                                        const EntropicGame& cfg,
                                                        std::uint64_t seed);

/// The same objectives as a differentiable game over a fixed sample set.
game::TwoPlayerGame entropic_game(const EntropicGame& cfg, std::uint64_t seed);

double squared_error(const game::JointPoint& x, double c1 = 0.0, double c2 = 0.0);

/// Cumulative signed angle swept around (c1, c2) by a 2-D trajectory.
double winding_angle(const std::vector<game::JointPoint>& path, double c1 = 0.0,
                     double c2 = 0.0);

/// First index k with squared_error(path[k]) < threshold.
std::optional<int> steps_to_threshold(const std::vector<game::JointPoint>& path,
                                      double threshold, double c1 = 0.0, double c2 = 0.0);

}  // namespace stac::examples
