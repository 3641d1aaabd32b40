#include "stac/examples/examples.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace stac::examples {

using diff::Tape;
using diff::Var;

game::TwoPlayerGame motivating_game() {
  diff::PairFn actor = [](Tape&, std::span<const Var> th, std::span<const Var> w) {
    return w[0] * th[0];
  };
  diff::PairFn critic = [](Tape&, std::span<const Var> th, std::span<const Var> w) {
    return diff::square(w[0] * th[0] + diff::square(th[0]) / 5.0);
  };
  return game::TwoPlayerGame::from(actor, game::Sense::Max, critic, game::Sense::Min, 1, 1);
}

double motivating_actor(double theta, double w) { return w * theta; }

double motivating_critic(double theta, double w) {
  const double r = w * theta + theta * theta / 5.0;
  return r * r;
}

MotivatingPartials motivating_partials(double theta, double w) {
  MotivatingPartials p;
  p.dj_dtheta = w;
  p.dj_dw = theta;
  p.dl_dw = 2.0 * (w * theta + theta * theta / 5.0) * theta;
  p.d2l_dw2 = 2.0 * theta * theta;
  p.d2l_dw_dtheta = 4.0 * w * theta + 1.2 * theta * theta;
  return p;
}

double oracle_total_derivative(double theta, double w) {
  if (theta == 0.0) throw SingularityError("critic Hessian 2 theta^2 vanishes at theta = 0");
  return -w - 0.6 * theta;
}

std::vector<double> entropic_noise(const EntropicGame& cfg, std::uint64_t seed) {
  if (cfg.mc_samples < 1) throw std::invalid_argument("mc_samples must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const int half = cfg.mc_samples / 2;
  std::vector<double> eps;
  eps.reserve(static_cast<std::size_t>(cfg.mc_samples));
  for (int i = 0; i < half; ++i) eps.push_back(normal(rng));
  for (int i = 0; i < half; ++i) eps.push_back(-eps[static_cast<std::size_t>(i)]);
  if (cfg.mc_samples % 2 == 1) eps.push_back(0.0);
  return eps;
}

std::pair<double, double> entropic_actor_objective_grad(double theta, double w,
                                                        const EntropicGame& cfg,
                                                        std::uint64_t seed) {
  const auto eps = entropic_noise(cfg, seed);
  double dtheta = 0.0, dw = 0.0;
  for (double e : eps) {
    const double a = std::tanh(theta + cfg.sigma * e);
    const double sech2 = 1.0 - a * a;
    dtheta += w * sech2 - 2.0 * cfg.eta * a;
    dw += 2.0 * (w * a + a * a / 5.0) * a;
  }
  const auto n = static_cast<double>(eps.size());
  return {dtheta / n, dw / n};
}

namespace {

// log(1 - tanh(u)^2) = 2 (log 2 - u - softplus(-2u)), finite for all u.
Var log_sech2(Var u) {
  return 2.0 * (std::numbers::ln2 - u - diff::softplus(-2.0 * u));
}

}  // namespace

game::TwoPlayerGame entropic_game(const EntropicGame& cfg, std::uint64_t seed) {
  const auto eps = entropic_noise(cfg, seed);
  const double log_norm = -std::log(cfg.sigma) - 0.5 * std::log(2.0 * std::numbers::pi);
  diff::PairFn actor = [eps, cfg, log_norm](Tape& t, std::span<const Var> th,
                                            std::span<const Var> w) {
    std::vector<Var> terms;
    terms.reserve(eps.size());
    for (double e : eps) {
      const Var u = th[0] + cfg.sigma * e;
      const Var a = diff::tanh(u);
      // log pi(a) = log N(u; theta, sigma) - log(1 - tanh(u)^2)
      const Var log_pi = (log_norm - 0.5 * e * e) - log_sech2(u);
      terms.push_back(w[0] * a - cfg.eta * log_pi);
    }
    return t.sum(terms) / static_cast<double>(eps.size());
  };
  diff::PairFn critic = [eps, cfg](Tape& t, std::span<const Var> th, std::span<const Var> w) {
    std::vector<Var> terms;
    terms.reserve(eps.size());
    for (double e : eps) {
      const Var a = diff::tanh(th[0] + cfg.sigma * e);
      terms.push_back(diff::square(w[0] * a + diff::square(a) / 5.0));
    }
    return t.sum(terms) / static_cast<double>(eps.size());
  };
  return game::TwoPlayerGame::from(actor, game::Sense::Max, critic, game::Sense::Min, 1, 1);
}

double squared_error(const game::JointPoint& x, double c1, double c2) {
  double s = 0.0;
  for (double v : x.x1.values()) s += (v - c1) * (v - c1);
  for (double v : x.x2.values()) s += (v - c2) * (v - c2);
  return s;
}

double winding_angle(const std::vector<game::JointPoint>& path, double c1, double c2) {
  double total = 0.0;
  for (std::size_t k = 1; k < path.size(); ++k) {
    const double a0 = std::atan2(path[k - 1].x2[0] - c2, path[k - 1].x1[0] - c1);
    const double a1 = std::atan2(path[k].x2[0] - c2, path[k].x1[0] - c1);
    double d = a1 - a0;
    if (d > std::numbers::pi) d -= 2 * std::numbers::pi;
    if (d < -std::numbers::pi) d += 2 * std::numbers::pi;
    total += d;
  }
  return total;
}

std::optional<int> steps_to_threshold(const std::vector<game::JointPoint>& path,
                                      double threshold, double c1, double c2) {
  for (std::size_t k = 0; k < path.size(); ++k) {
    if (squared_error(path[k], c1, c2) < threshold) return static_cast<int>(k);
  }
  return std::nullopt;
}

}  // namespace stac::examples
