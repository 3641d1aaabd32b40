#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace stac::env {

using Rng = std::mt19937_64;

struct ActionSpace {
  bool discrete = false;
  int n = 0;                 // discrete
  std::vector<double> low;   // box
  std::vector<double> high;  // box

  static ActionSpace make_discrete(int n);
  static ActionSpace box(std::vector<double> low, std::vector<double> high);
  /// Length of an action vector: 1 for discrete spaces.
  std::size_t dim() const { return discrete ? 1 : low.size(); }
};

struct MDPSpec {
  std::string name;
  std::size_t state_dim = 0;
  ActionSpace action_space;
  double gamma = 0.99;
  int horizon = 1;
};

struct Transition {
  std::vector<double> s;
  std::vector<double> a;  // discrete actions are stored as a single index
  std::vector<double> u;  // pre-squash action, when the policy squashes
  double r = 0.0;
  std::vector<double> s2;
  bool done = false;       // terminal: no bootstrap from s2
  bool truncated = false;  // horizon reached without a terminal state
};

struct Trajectory {
  std::vector<Transition> steps;

  std::size_t size() const { return steps.size(); }
  bool terminated() const { return !steps.empty() && steps.back().done; }
};

struct StepResult {
  std::vector<double> obs;
  double reward = 0.0;
  bool terminal = false;
  bool truncated = false;
  bool ended() const { return terminal || truncated; }
};

/// Seeded episodic environment. Same seed, same actions: same observations.
class Env {
 public:
  virtual ~Env() = default;
  virtual const MDPSpec& spec() const = 0;
  virtual std::vector<double> reset() = 0;
  virtual StepResult step(std::span<const double> action) = 0;
  virtual std::unique_ptr<Env> clone() const = 0;
  void seed(std::uint64_t s) { rng_.seed(s); }

 protected:
  Rng rng_{0};
};

/// Single-step bandit with reward -a^2/5 on a in [-1, 1].
class OneStepEnv final : public Env {
 public:
  OneStepEnv();
  const MDPSpec& spec() const override { return spec_; }
  std::vector<double> reset() override;
  StepResult step(std::span<const double> action) override;
  std::unique_ptr<Env> clone() const override { return std::make_unique<OneStepEnv>(*this); }

  static double reward(double a) { return -a * a / 5.0; }

 private:
  MDPSpec spec_;
};

std::unique_ptr<Env> one_step_env();

struct CartPoleState {
  double x = 0.0, x_dot = 0.0, theta = 0.0, theta_dot = 0.0;
};

struct CartPoleStep {
  CartPoleState next;
  double reward = 1.0;
  bool terminal = false;
};

/// Classic cart-pole, explicit Euler with positions advanced from the old
/// velocities. action 1 pushes right.
CartPoleStep cartpole_step(const CartPoleState& s, int action);
bool cartpole_out_of_bounds(const CartPoleState& s);

class CartPoleEnv final : public Env {
 public:
  static constexpr int kMaxSteps = 500;
  CartPoleEnv();
  const MDPSpec& spec() const override { return spec_; }
  std::vector<double> reset() override;
  StepResult step(std::span<const double> action) override;
  std::unique_ptr<Env> clone() const override { return std::make_unique<CartPoleEnv>(*this); }
  const CartPoleState& state() const { return state_; }

 private:
  MDPSpec spec_;
  CartPoleState state_;
  int t_ = 0;
};

struct PendulumState {
  double theta = 0.0;  // 0 is upright
  double theta_dot = 0.0;
};

struct PendulumStep {
  PendulumState next;
  double reward = 0.0;
};

/// Maps an angle to [-pi, pi).
double wrap_angle(double a);
/// Torque is clipped to [-2, 2] before use.
PendulumStep pendulum_step(const PendulumState& s, double torque);

class PendulumEnv final : public Env {
 public:
  static constexpr int kMaxSteps = 200;
  PendulumEnv();
  const MDPSpec& spec() const override { return spec_; }
  std::vector<double> reset() override;
  StepResult step(std::span<const double> action) override;
  std::unique_ptr<Env> clone() const override { return std::make_unique<PendulumEnv>(*this); }
  const PendulumState& state() const { return state_; }
  /// Number of actions clipped to the torque box so far.
  std::size_t clipped() const { return clipped_; }

  static std::vector<double> observe(const PendulumState& s);

 private:
  MDPSpec spec_;
  PendulumState state_;
  int t_ = 0;
  std::size_t clipped_ = 0;
};

std::unique_ptr<Env> make_env(const std::string& name);

/// Tabular MDP small enough to enumerate: |S|, |A|, horizon all at most 3.
struct FiniteMDP {
  int n_states = 0;
  int n_actions = 0;
  int horizon = 1;
  double gamma = 1.0;
  std::vector<double> p;    // P[s, a, s'] row-major
  std::vector<double> r;    // r[s, a]
  std::vector<double> rho;  // initial distribution

  double prob(int s, int a, int s2) const {
    return p[static_cast<std::size_t>((s * n_actions + a) * n_states + s2)];
  }
  double reward(int s, int a) const { return r[static_cast<std::size_t>(s * n_actions + a)]; }
  /// Throws std::invalid_argument on size or normalisation violations.
  void validate() const;
};

FiniteMDP random_finite_mdp(Rng& rng, int n_states, int n_actions, int horizon, double gamma);

/// pi[s * n_actions + a]
using TabularPolicy = std::vector<double>;

struct FiniteTrajectory {
  std::vector<int> states;
  std::vector<int> actions;
  std::vector<double> rewards;
  double probability = 1.0;
};

/// Every trajectory of `horizon` steps with nonzero probability. The state
/// after the final action is not enumerated.
std::vector<FiniteTrajectory> enumerate_trajectories(const FiniteMDP& m, const TabularPolicy& pi);

FiniteTrajectory sample_trajectory(const FiniteMDP& m, const TabularPolicy& pi, Rng& rng);

/// Time-indexed exact values: q[t][s * n_actions + a], v[t][s], t < horizon.
struct ExactValues {
  std::vector<std::vector<double>> q;
  std::vector<std::vector<double>> v;
};
ExactValues exact_values(const FiniteMDP& m, const TabularPolicy& pi);

}  // namespace stac::env
