#include <cmath>
#include <numbers>

#include "doctest.h"
#include "stac/env/env.hpp"

using namespace stac::env;

TEST_CASE("one-step rewards") {
  OneStepEnv e;
  e.reset();
  CHECK(e.step(std::vector<double>{0.0}).reward == 0.0);
  e.reset();
  CHECK(e.step(std::vector<double>{1.0}).reward == doctest::Approx(-0.2));
  e.reset();
  auto r = e.step(std::vector<double>{-0.5});
  CHECK(r.reward == doctest::Approx(-0.05));
  CHECK(r.terminal);
  CHECK(e.spec().horizon == 1);
}

TEST_CASE("cart-pole push right from rest") {
  auto st = cartpole_step({}, 1);
  CHECK(st.next.x == 0.0);
  CHECK(st.next.theta == 0.0);
  // temp = 10/1.1, theta_acc = -temp / (0.5 (4/3 - 0.1/1.1)), x_acc = temp - 0.05 theta_acc / 1.1
  const double temp = 10.0 / 1.1;
  const double theta_acc = -temp / (0.5 * (4.0 / 3.0 - 0.1 / 1.1));
  const double x_acc = temp - 0.05 * theta_acc / 1.1;
  CHECK(st.next.x_dot == doctest::Approx(0.02 * x_acc).epsilon(1e-14));
  CHECK(st.next.theta_dot == doctest::Approx(0.02 * theta_acc).epsilon(1e-14));
  CHECK(st.next.x_dot == doctest::Approx(0.19512).epsilon(1e-4));
  CHECK(st.next.theta_dot == doctest::Approx(-0.29268).epsilon(1e-4));
  CHECK(st.reward == 1.0);
  CHECK_FALSE(st.terminal);
}

TEST_CASE("cart-pole bounds and mirror symmetry") {
  CHECK(cartpole_out_of_bounds({2.5, 0, 0, 0}));
  CHECK(cartpole_out_of_bounds({0, 0, -0.21, 0}));
  CHECK_FALSE(cartpole_out_of_bounds({2.3, 0, 0.2, 0}));
  CartPoleState s{0.3, -0.4, 0.05, 0.7};
  CartPoleState m{-0.3, 0.4, -0.05, -0.7};
  for (int a : {0, 1}) {
    auto n1 = cartpole_step(s, a).next;
    auto n2 = cartpole_step(m, 1 - a).next;
    CHECK(n1.x == -n2.x);
    CHECK(n1.x_dot == doctest::Approx(-n2.x_dot).epsilon(1e-15));
    CHECK(n1.theta == -n2.theta);
    CHECK(n1.theta_dot == doctest::Approx(-n2.theta_dot).epsilon(1e-15));
  }
}

TEST_CASE("cart-pole truncates at 500 steps") {
  CartPoleEnv e;
  e.seed(1);
  e.reset();
  // Alternate pushes keep the pole up long enough to hit the limit, or terminate.
  int t = 0;
  StepResult r;
  do {
    const double a = e.state().theta + 0.5 * e.state().theta_dot > 0 ? 1.0 : 0.0;
    r = e.step(std::vector<double>{a});
    ++t;
  } while (!r.ended());
  CHECK(t <= 500);
  if (t == 500) {
    CHECK(r.truncated);
    CHECK_FALSE(r.terminal);
  }
}

TEST_CASE("pendulum dynamics") {
  auto eq = pendulum_step({0.0, 0.0}, 0.0);
  CHECK(eq.reward == 0.0);
  CHECK(eq.next.theta == 0.0);
  CHECK(eq.next.theta_dot == 0.0);
  auto down = pendulum_step({std::numbers::pi, 0.0}, 0.0);
  CHECK(down.reward == doctest::Approx(-std::numbers::pi * std::numbers::pi));
  CHECK(wrap_angle(1.5 * std::numbers::pi) == doctest::Approx(-0.5 * std::numbers::pi));
  auto clipped = pendulum_step({0.3, 1.0}, 5.0);
  auto boxed = pendulum_step({0.3, 1.0}, 2.0);
  CHECK(clipped.next.theta_dot == boxed.next.theta_dot);
  auto fast = pendulum_step({1.0, 7.99}, 2.0);
  CHECK(fast.next.theta_dot == 8.0);

  PendulumEnv e;
  e.seed(3);
  e.reset();
  int t = 0;
  StepResult r;
  do {
    r = e.step(std::vector<double>{3.0});
    ++t;
    CHECK_FALSE(r.terminal);
  } while (!r.ended());
  CHECK(t == 200);
  CHECK(e.clipped() == 200);
}

TEST_CASE("environments are deterministic in the seed") {
  for (const char* name : {"cartpole", "pendulum"}) {
    auto a = make_env(name), b = make_env(name);
    a->seed(42);
    b->seed(42);
    for (int ep = 0; ep < 3; ++ep) {
      auto oa = a->reset(), ob = b->reset();
      CHECK(oa == ob);
      for (int t = 0; t < 50; ++t) {
        std::vector<double> act{t % 2 == 0 ? 1.0 : 0.0};
        if (a->spec().action_space.discrete == false) act[0] = std::sin(t);
        auto ra = a->step(act), rb = b->step(act);
        CHECK(ra.obs == rb.obs);
        CHECK(ra.reward == rb.reward);
        if (ra.ended()) break;
      }
    }
  }
}

TEST_CASE("finite MDP enumeration") {
  FiniteMDP bandit;
  bandit.n_states = 1;
  bandit.n_actions = 2;
  bandit.horizon = 1;
  bandit.p = {1.0, 1.0};
  bandit.r = {1.0, 0.0};
  bandit.rho = {1.0};
  auto tr = enumerate_trajectories(bandit, {0.3, 0.7});
  REQUIRE(tr.size() == 2);
  CHECK(tr[0].probability == doctest::Approx(0.3));
  CHECK(tr[1].probability == doctest::Approx(0.7));

  FiniteMDP det;
  det.n_states = 2;
  det.n_actions = 2;
  det.horizon = 3;
  det.gamma = 0.9;
  det.p = {0, 1, 1, 0, 1, 0, 0, 1};
  det.r = {1, 2, 3, 4};
  det.rho = {1, 0};
  auto one = enumerate_trajectories(det, {1, 0, 0, 1});
  REQUIRE(one.size() == 1);
  CHECK(one[0].probability == 1.0);

  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    auto m = random_finite_mdp(rng, 1 + trial % 3, 1 + (trial / 3) % 3, 1 + trial % 3, 0.9);
    TabularPolicy pi;
    std::uniform_real_distribution<double> u(0.1, 1.0);
    for (int s = 0; s < m.n_states; ++s) {
      std::vector<double> row(static_cast<std::size_t>(m.n_actions));
      double z = 0;
      for (double& x : row) z += (x = u(rng));
      for (double x : row) pi.push_back(x / z);
    }
    auto all = enumerate_trajectories(m, pi);
    double total = 0;
    for (auto& t : all) total += t.probability;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
    const std::size_t bound = static_cast<std::size_t>(
        std::pow(m.n_states * m.n_actions, m.horizon));
    CHECK(all.size() <= bound);

    // Bellman identity for the exact values.
    auto ev = exact_values(m, pi);
    for (int t = 0; t + 1 < m.horizon; ++t) {
      for (int s = 0; s < m.n_states; ++s) {
        for (int a = 0; a < m.n_actions; ++a) {
          double rhs = m.reward(s, a);
          for (int s2 = 0; s2 < m.n_states; ++s2)
            rhs += m.gamma * m.prob(s, a, s2) * ev.v[t + 1][s2];
          CHECK(std::abs(ev.q[t][s * m.n_actions + a] - rhs) <= 1e-12);
        }
      }
    }
  }

  FiniteMDP big = bandit;
  big.horizon = 4;
  CHECK_THROWS_AS(enumerate_trajectories(big, {0.5, 0.5}), std::invalid_argument);
}

TEST_CASE("two-state horizon-two enumeration") {
  Rng rng(9);
  auto m = random_finite_mdp(rng, 2, 2, 2, 0.95);
  m.rho = {1.0, 0.0};
  auto all = enumerate_trajectories(m, {0.4, 0.6, 0.5, 0.5});
  CHECK(all.size() <= 8);
  double total = 0;
  for (auto& t : all) total += t.probability;
  CHECK(total == doctest::Approx(1.0));
}
