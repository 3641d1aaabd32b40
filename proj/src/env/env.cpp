#include "stac/env/env.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace stac::env {

ActionSpace ActionSpace::make_discrete(int n) {
  ActionSpace a;
  a.discrete = true;
  a.n = n;
  return a;
}

ActionSpace ActionSpace::box(std::vector<double> low, std::vector<double> high) {
  if (low.size() != high.size()) throw std::invalid_argument("box bounds differ in length");
  ActionSpace a;
  a.low = std::move(low);
  a.high = std::move(high);
  return a;
}

OneStepEnv::OneStepEnv() {
  spec_.name = "one_step";
  spec_.state_dim = 1;
  spec_.action_space = ActionSpace::box({-1.0}, {1.0});
  spec_.gamma = 1.0;
  spec_.horizon = 1;
}

std::vector<double> OneStepEnv::reset() { return {0.0}; }

StepResult OneStepEnv::step(std::span<const double> action) {
  const double a = std::clamp(action[0], -1.0, 1.0);
  return {{0.0}, reward(a), true, false};
}

std::unique_ptr<Env> one_step_env() { return std::make_unique<OneStepEnv>(); }

namespace cp {
constexpr double kGravity = 9.8;
constexpr double kCartMass = 1.0;
constexpr double kPoleMass = 0.1;
constexpr double kTotalMass = kCartMass + kPoleMass;
constexpr double kHalfLength = 0.5;
constexpr double kPoleMassLength = kPoleMass * kHalfLength;
constexpr double kForce = 10.0;
constexpr double kTau = 0.02;
constexpr double kXLimit = 2.4;
constexpr double kThetaLimit = 0.2095;
}  // namespace cp

bool cartpole_out_of_bounds(const CartPoleState& s) {
  return std::abs(s.x) > cp::kXLimit || std::abs(s.theta) > cp::kThetaLimit;
}

CartPoleStep cartpole_step(const CartPoleState& s, int action) {
  if (action != 0 && action != 1) throw std::invalid_argument("cart-pole action must be 0 or 1");
  const double force = action == 1 ? cp::kForce : -cp::kForce;
  const double cos_t = std::cos(s.theta);
  const double sin_t = std::sin(s.theta);
  const double temp =
      (force + cp::kPoleMassLength * s.theta_dot * s.theta_dot * sin_t) / cp::kTotalMass;
  const double theta_acc =
      (cp::kGravity * sin_t - cos_t * temp) /
      (cp::kHalfLength * (4.0 / 3.0 - cp::kPoleMass * cos_t * cos_t / cp::kTotalMass));
  const double x_acc = temp - cp::kPoleMassLength * theta_acc * cos_t / cp::kTotalMass;
  CartPoleStep out;
  out.next.x = s.x + cp::kTau * s.x_dot;
  out.next.x_dot = s.x_dot + cp::kTau * x_acc;
  out.next.theta = s.theta + cp::kTau * s.theta_dot;
  out.next.theta_dot = s.theta_dot + cp::kTau * theta_acc;
  out.terminal = cartpole_out_of_bounds(out.next);
  out.reward = 1.0;
  return out;
}

CartPoleEnv::CartPoleEnv() {
  spec_.name = "cartpole";
  spec_.state_dim = 4;
  spec_.action_space = ActionSpace::make_discrete(2);
  spec_.gamma = 0.99;
  spec_.horizon = kMaxSteps;
}

namespace {
std::vector<double> observe(const CartPoleState& s) {
  return {s.x, s.x_dot, s.theta, s.theta_dot};
}
}  // namespace

std::vector<double> CartPoleEnv::reset() {
  std::uniform_real_distribution<double> u(-0.05, 0.05);
  state_.x = u(rng_);
  state_.x_dot = u(rng_);
  state_.theta = u(rng_);
  state_.theta_dot = u(rng_);
  t_ = 0;
  return observe(state_);
}

StepResult CartPoleEnv::step(std::span<const double> action) {
  const auto st = cartpole_step(state_, static_cast<int>(std::lround(action[0])));
  state_ = st.next;
  ++t_;
  StepResult r;
  r.obs = observe(state_);
  r.reward = st.reward;
  r.terminal = st.terminal;
  r.truncated = !st.terminal && t_ >= kMaxSteps;
  return r;
}

double wrap_angle(double a) {
  const double two_pi = 2.0 * std::numbers::pi;
  double w = std::fmod(a + std::numbers::pi, two_pi);
  if (w < 0) w += two_pi;
  return w - std::numbers::pi;
}

namespace pd {
constexpr double kGravity = 10.0;
constexpr double kMass = 1.0;
constexpr double kLength = 1.0;
constexpr double kDt = 0.05;
constexpr double kMaxSpeed = 8.0;
constexpr double kMaxTorque = 2.0;
}  // namespace pd

PendulumStep pendulum_step(const PendulumState& s, double torque) {
  const double u = std::clamp(torque, -pd::kMaxTorque, pd::kMaxTorque);
  const double th = wrap_angle(s.theta);
  PendulumStep out;
  out.reward = -(th * th + 0.1 * s.theta_dot * s.theta_dot + 0.001 * u * u);
  double thdot = s.theta_dot + (3.0 * pd::kGravity / (2.0 * pd::kLength) * std::sin(s.theta) +
                                3.0 / (pd::kMass * pd::kLength * pd::kLength) * u) *
                                   pd::kDt;
  thdot = std::clamp(thdot, -pd::kMaxSpeed, pd::kMaxSpeed);
  out.next.theta = s.theta + thdot * pd::kDt;
  out.next.theta_dot = thdot;
  return out;
}

PendulumEnv::PendulumEnv() {
  spec_.name = "pendulum";
  spec_.state_dim = 3;
  spec_.action_space = ActionSpace::box({-pd::kMaxTorque}, {pd::kMaxTorque});
  spec_.gamma = 0.99;
  spec_.horizon = kMaxSteps;
}

std::vector<double> PendulumEnv::observe(const PendulumState& s) {
  return {std::cos(s.theta), std::sin(s.theta), s.theta_dot};
}

std::vector<double> PendulumEnv::reset() {
  std::uniform_real_distribution<double> th(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> om(-1.0, 1.0);
  state_.theta = th(rng_);
  state_.theta_dot = om(rng_);
  t_ = 0;
  return observe(state_);
}

StepResult PendulumEnv::step(std::span<const double> action) {
  if (action[0] < -pd::kMaxTorque || action[0] > pd::kMaxTorque) ++clipped_;
  const auto st = pendulum_step(state_, action[0]);
  state_ = st.next;
  ++t_;
  StepResult r;
  r.obs = observe(state_);
  r.reward = st.reward;
  r.truncated = t_ >= kMaxSteps;
  return r;
}

std::unique_ptr<Env> make_env(const std::string& name) {
  if (name == "cartpole") return std::make_unique<CartPoleEnv>();
  if (name == "pendulum") return std::make_unique<PendulumEnv>();
  if (name == "one_step") return std::make_unique<OneStepEnv>();
  throw std::invalid_argument("unknown environment: " + name);
}

void FiniteMDP::validate() const {
  if (n_states < 1 || n_states > 3 || n_actions < 1 || n_actions > 3 || horizon < 1 ||
      horizon > 3)
    throw std::invalid_argument("finite MDP exceeds the enumeration bounds (3 states, 3 actions, horizon 3)");
  const auto ns = static_cast<std::size_t>(n_states), na = static_cast<std::size_t>(n_actions);
  if (p.size() != ns * na * ns || r.size() != ns * na || rho.size() != ns)
    throw std::invalid_argument("finite MDP tensors have the wrong shape");
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) {
      double sum = 0.0;
      for (int s2 = 0; s2 < n_states; ++s2) {
        if (prob(s, a, s2) < 0.0) throw std::invalid_argument("negative transition probability");
        sum += prob(s, a, s2);
      }
      if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("transition row does not sum to 1");
    }
  }
  double sum = 0.0;
  for (double v : rho) sum += v;
  if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("initial distribution does not sum to 1");
}

namespace {

std::vector<double> random_simplex(Rng& rng, int n) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> v(static_cast<std::size_t>(n));
  double s = 0.0;
  for (double& x : v) s += (x = e(rng));
  for (double& x : v) x /= s;
  return v;
}

}  // namespace

FiniteMDP random_finite_mdp(Rng& rng, int n_states, int n_actions, int horizon, double gamma) {
  FiniteMDP m;
  m.n_states = n_states;
  m.n_actions = n_actions;
  m.horizon = horizon;
  m.gamma = gamma;
  std::uniform_real_distribution<double> ur(-1.0, 1.0);
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) {
      const auto row = random_simplex(rng, n_states);
      m.p.insert(m.p.end(), row.begin(), row.end());
      m.r.push_back(ur(rng));
    }
  }
  m.rho = random_simplex(rng, n_states);
  m.validate();
  return m;
}

namespace {

double pi_of(const FiniteMDP& m, const TabularPolicy& pi, int s, int a) {
  return pi[static_cast<std::size_t>(s * m.n_actions + a)];
}

void check_policy(const FiniteMDP& m, const TabularPolicy& pi) {
  if (pi.size() != static_cast<std::size_t>(m.n_states * m.n_actions))
    throw std::invalid_argument("tabular policy has the wrong shape");
}

void extend(const FiniteMDP& m, const TabularPolicy& pi, FiniteTrajectory& cur, int s,
            std::vector<FiniteTrajectory>& out) {
  for (int a = 0; a < m.n_actions; ++a) {
    const double pa = pi_of(m, pi, s, a);
    if (pa == 0.0) continue;
    FiniteTrajectory next = cur;
    next.states.push_back(s);
    next.actions.push_back(a);
    next.rewards.push_back(m.reward(s, a));
    next.probability *= pa;
    if (static_cast<int>(next.states.size()) == m.horizon) {
      out.push_back(std::move(next));
      continue;
    }
    for (int s2 = 0; s2 < m.n_states; ++s2) {
      const double ps = m.prob(s, a, s2);
      if (ps == 0.0) continue;
      FiniteTrajectory branch = next;
      branch.probability *= ps;
      extend(m, pi, branch, s2, out);
    }
  }
}

}  // namespace

std::vector<FiniteTrajectory> enumerate_trajectories(const FiniteMDP& m, const TabularPolicy& pi) {
  m.validate();
  check_policy(m, pi);
  std::vector<FiniteTrajectory> out;
  for (int s0 = 0; s0 < m.n_states; ++s0) {
    const double p0 = m.rho[static_cast<std::size_t>(s0)];
    if (p0 == 0.0) continue;
    FiniteTrajectory root;
    root.probability = p0;
    extend(m, pi, root, s0, out);
  }
  return out;
}

namespace {

int draw(Rng& rng, std::span<const double> probs) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double x = u(rng), acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (x < acc) return static_cast<int>(i);
  }
  for (std::size_t i = probs.size(); i-- > 0;)
    if (probs[i] > 0.0) return static_cast<int>(i);
  return 0;
}

}  // namespace

FiniteTrajectory sample_trajectory(const FiniteMDP& m, const TabularPolicy& pi, Rng& rng) {
  check_policy(m, pi);
  FiniteTrajectory tr;
  int s = draw(rng, m.rho);
  tr.probability = m.rho[static_cast<std::size_t>(s)];
  for (int t = 0; t < m.horizon; ++t) {
    const auto row = std::span<const double>(pi).subspan(
        static_cast<std::size_t>(s * m.n_actions), static_cast<std::size_t>(m.n_actions));
    const int a = draw(rng, row);
    tr.states.push_back(s);
    tr.actions.push_back(a);
    tr.rewards.push_back(m.reward(s, a));
    tr.probability *= pi_of(m, pi, s, a);
    if (t + 1 < m.horizon) {
      const auto prow = std::span<const double>(m.p).subspan(
          static_cast<std::size_t>((s * m.n_actions + a) * m.n_states),
          static_cast<std::size_t>(m.n_states));
      const int s2 = draw(rng, prow);
      tr.probability *= m.prob(s, a, s2);
      s = s2;
    }
  }
  return tr;
}

ExactValues exact_values(const FiniteMDP& m, const TabularPolicy& pi) {
  m.validate();
  check_policy(m, pi);
  const auto ns = static_cast<std::size_t>(m.n_states);
  const auto na = static_cast<std::size_t>(m.n_actions);
  const auto h = static_cast<std::size_t>(m.horizon);
  ExactValues ev;
  ev.q.assign(h, std::vector<double>(ns * na, 0.0));
  ev.v.assign(h, std::vector<double>(ns, 0.0));
  for (std::size_t t = h; t-- > 0;) {
    for (int s = 0; s < m.n_states; ++s) {
      double v = 0.0;
      for (int a = 0; a < m.n_actions; ++a) {
        double q = m.reward(s, a);
        if (t + 1 < h) {
          for (int s2 = 0; s2 < m.n_states; ++s2)
            q += m.gamma * m.prob(s, a, s2) * ev.v[t + 1][static_cast<std::size_t>(s2)];
        }
        ev.q[t][static_cast<std::size_t>(s) * na + static_cast<std::size_t>(a)] = q;
        v += pi_of(m, pi, s, a) * q;
      }
      ev.v[t][static_cast<std::size_t>(s)] = v;
    }
  }
  return ev;
}

}  // namespace stac::env
