#include <cmath>
#include <numbers>

#include "doctest.h"
#include "stac/examples/examples.hpp"
#include "stac/game/game.hpp"

using namespace stac;
using game::JointPoint;
using game::LeaderConfig;
using diff::ParamVector;
using diff::Tape;
using diff::Var;

namespace {

JointPoint at(double a, double b) { return {ParamVector({a}), ParamVector({b})}; }

game::TwoPlayerGame separable() {
  return game::TwoPlayerGame::from(
      [](Tape&, std::span<const Var> a, std::span<const Var>) { return diff::square(a[0]); },
      game::Sense::Min,
      [](Tape&, std::span<const Var>, std::span<const Var> b) { return diff::square(b[0]); },
      game::Sense::Min, 1, 1);
}

game::TwoPlayerGame tracking() {
  return game::TwoPlayerGame::from(
      [](Tape&, std::span<const Var> a, std::span<const Var>) { return diff::square(a[0]); },
      game::Sense::Min,
      [](Tape&, std::span<const Var> a, std::span<const Var> b) {
        return diff::square(b[0] - a[0]);
      },
      game::Sense::Min, 1, 1);
}

}  // namespace

TEST_CASE("individual gradient of the motivating game") {
  auto g = examples::motivating_game();
  auto gp = game::individual_gradient(g, at(0.5, 0.2));
  CHECK(gp.g1[0] == doctest::Approx(0.2));
  CHECK(gp.g2[0] == doctest::Approx(0.15));
  auto p = examples::motivating_partials(0.5, 0.2);
  CHECK(gp.g1[0] == doctest::Approx(p.dj_dtheta));
  CHECK(gp.g2[0] == doctest::Approx(p.dl_dw));
}

TEST_CASE("individual gradient at stationary and separable points") {
  auto gp = game::individual_gradient(examples::motivating_game(), at(0.0, 0.0));
  CHECK(gp.g1[0] == 0.0);
  CHECK(gp.g2[0] == 0.0);
  auto sp = game::individual_gradient(separable(), at(1.0, 1.0));
  CHECK(sp.g1[0] == doctest::Approx(2.0));
  CHECK(sp.g2[0] == doctest::Approx(2.0));
}

TEST_CASE("Stackelberg gradient of the motivating game") {
  auto g = examples::motivating_game();
  LeaderConfig cfg;
  auto gp = game::stackelberg_gradient(g, at(0.5, 0.2), cfg);
  CHECK(gp.g1[0] == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(gp.g2[0] == doctest::Approx(0.15));
  CHECK_FALSE(gp.diag.fallback);

  cfg.lambda = 0.3;
  auto zero = game::stackelberg_gradient(g, at(0.0, 0.4), cfg);
  CHECK(zero.g1[0] == doctest::Approx(0.4));
  CHECK(zero.diag.correction_norm == 0.0);

  cfg.lambda = 1e12;
  auto big = game::stackelberg_gradient(g, at(0.5, 0.2), cfg);
  CHECK(std::abs(big.g1[0] - 0.2) <= 1e-10);
}

TEST_CASE("Stackelberg gradient matches the closed form over the grid") {
  auto g = examples::motivating_game();
  LeaderConfig cfg;
  double worst = 0.0;
  for (int i = 0; i <= 20; ++i) {
    for (int j = 0; j <= 20; ++j) {
      const double th = -1.0 + 0.1 * i, w = -1.0 + 0.1 * j;
      if (std::abs(th) < 0.05) continue;
      auto gp = game::stackelberg_gradient(g, at(th, w), cfg);
      worst = std::max(worst, std::abs(gp.g1[0] - examples::oracle_total_derivative(th, w)));
    }
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("regularisation interpolates between Stackelberg and individual") {
  auto g = examples::motivating_game();
  for (auto [th, w] : {std::pair{0.5, 0.2}, {-0.7, 0.9}, {0.3, -0.4}}) {
    LeaderConfig cfg;
    const double st = game::stackelberg_gradient(g, at(th, w), cfg).g1[0];
    cfg.lambda = 1e-8;
    CHECK(std::abs(game::stackelberg_gradient(g, at(th, w), cfg).g1[0] - st) <= 1e-5);
    cfg.lambda = 1e8;
    CHECK(std::abs(game::stackelberg_gradient(g, at(th, w), cfg).g1[0] - w) <= 1e-5);

    // Continuous path with at most one sign change over a log grid.
    int flips = 0;
    double prev = st;
    for (int e = -8; e <= 8; ++e) {
      cfg.lambda = std::pow(10.0, e);
      const double d = game::stackelberg_gradient(g, at(th, w), cfg).g1[0];
      if ((d > 0) != (prev > 0)) ++flips;
      prev = d;
    }
    CHECK(flips <= ((st > 0) != (w > 0) ? 1 : 0));
  }
}

TEST_CASE("critic as leader uses the transposed mixed term") {
  // f1 = x1^2 + x1 x2 (min), f2 = (x2 - 1)^2 + x1 x2 (min). Leader 2.
  auto g = game::TwoPlayerGame::from(
      [](Tape&, std::span<const Var> a, std::span<const Var> b) {
        return diff::square(a[0]) + a[0] * b[0];
      },
      game::Sense::Min,
      [](Tape&, std::span<const Var> a, std::span<const Var> b) {
        return diff::square(b[0] - 1.0) + 3.0 * a[0] * b[0];
      },
      game::Sense::Min, 1, 1);
  LeaderConfig cfg;
  cfg.leader = game::Player::Second;
  const double x1 = 0.4, x2 = -0.3;
  auto gp = game::stackelberg_gradient(g, at(x1, x2), cfg);
  // Best response x1*(x2) = -x2/2, so d/dx2 f2(x1*(x2), x2) = 2(x2 - 1) + 3 x1 - 3 x2 / 2.
  CHECK(gp.g2[0] == doctest::Approx(2 * (x2 - 1) + 3 * x1 - 1.5 * x2));
  CHECK(gp.g1[0] == doctest::Approx(2 * x1 + x2));
}

TEST_CASE("max-sense follower is sign-normalised") {
  // Leader min f1 = (x2 - 1)^2 + x1^2, follower max f2 = -(x2 - x1)^2. Best response x2 = x1.
  auto g = game::TwoPlayerGame::from(
      [](Tape&, std::span<const Var> a, std::span<const Var> b) {
        return diff::square(b[0] - 1.0) + diff::square(a[0]);
      },
      game::Sense::Min,
      [](Tape&, std::span<const Var> a, std::span<const Var> b) {
        return -diff::square(b[0] - a[0]);
      },
      game::Sense::Max, 1, 1);
  auto gp = game::stackelberg_gradient(g, at(0.3, 0.3), LeaderConfig{});
  // d/dx1 [(x1 - 1)^2 + x1^2] = 2(x1 - 1) + 2 x1
  CHECK(gp.g1[0] == doctest::Approx(2 * (0.3 - 1) + 0.6));
}

TEST_CASE("CG breakdown falls back to the individual gradient") {
  // Follower objective linear in x2: zero Hessian, nonzero right-hand side.
  auto g = game::TwoPlayerGame::from(
      [](Tape&, std::span<const Var> a, std::span<const Var> b) { return a[0] * b[0]; },
      game::Sense::Min,
      [](Tape&, std::span<const Var> a, std::span<const Var> b) { return a[0] * b[0]; },
      game::Sense::Min, 1, 1);
  auto gp = game::stackelberg_gradient(g, at(0.7, 0.3), LeaderConfig{});
  CHECK(gp.diag.fallback);
  CHECK(gp.g1[0] == doctest::Approx(0.3));
}

TEST_CASE("one individual Euler step") {
  auto path = game::integrate(examples::motivating_game(), at(0.5, 0.2), game::Rule::Individual,
                              LeaderConfig{}, 0.01, 0.01, 1);
  REQUIRE(path.size() == 2);
  CHECK(path[1].x1[0] == doctest::Approx(0.502));
  CHECK(path[1].x2[0] == doctest::Approx(0.1985));
}

TEST_CASE("stationary starts stay put") {
  for (auto rule : {game::Rule::Individual, game::Rule::Stackelberg}) {
    LeaderConfig cfg;
    cfg.lambda = 0.01;
    auto path = game::integrate(examples::motivating_game(), at(0.0, 0.0), rule, cfg, 0.05,
                                0.05, 5);
    for (const auto& p : path) CHECK(examples::squared_error(p) == 0.0);
  }
}

TEST_CASE("regularised Stackelberg error is monotone after ten steps") {
  LeaderConfig cfg;
  cfg.lambda = 0.01;
  auto path = game::integrate(examples::motivating_game(), at(0.5, 0.5), game::Rule::Stackelberg,
                              cfg, 0.05, 0.05, 2000);
  for (std::size_t k = 11; k < path.size(); ++k)
    CHECK(examples::squared_error(path[k]) <= examples::squared_error(path[k - 1]) + 1e-15);
}

TEST_CASE("unrolling takes m follower steps at the old leader") {
  LeaderConfig cfg;
  cfg.unroll_m = 3;
  auto g = examples::motivating_game();
  auto path = game::integrate(g, at(0.5, 0.2), game::Rule::Stackelberg, cfg, 0.01, 0.1, 1);
  double w = 0.2;
  for (int l = 0; l < 3; ++l) w -= 0.1 * examples::motivating_partials(0.5, w).dl_dw;
  CHECK(path[1].x2[0] == doctest::Approx(w).epsilon(1e-14));
  CHECK(path[1].x1[0] == doctest::Approx(0.5 + 0.01 * -0.5));
}

TEST_CASE("vector field rows") {
  auto g = examples::motivating_game();
  game::Grid grid{-1, 1, -1, 1, 3, 3};
  auto rows = game::sample_vector_field(g, game::Rule::Individual, LeaderConfig{}, grid);
  CHECK(rows.size() == 9);
  CHECK(rows[1].x1 == -1.0);
  CHECK(rows[1].x2 == 0.0);
  game::Grid one{0.5, 0.5, 0.2, 0.2, 1, 1};
  auto ind = game::sample_vector_field(g, game::Rule::Individual, LeaderConfig{}, one);
  CHECK(ind[0].dx1 == doctest::Approx(0.2));
  CHECK(ind[0].dx2 == doctest::Approx(-0.15));
  auto st = game::sample_vector_field(g, game::Rule::Stackelberg, LeaderConfig{}, one);
  CHECK(st[0].dx1 == doctest::Approx(-0.5));
  // theta = 0 column: CG sees a zero right-hand side and no breakdown occurs.
  auto full = game::sample_vector_field(g, game::Rule::Stackelberg, LeaderConfig{}, grid);
  CHECK(full[4].dx1 == doctest::Approx(0.0));
}

TEST_CASE("differential Stackelberg equilibrium checks") {
  auto dse = game::check_dse(tracking(), at(0.0, 0.0), 1e-8);
  CHECK(dse.verdict == game::Verdict::DSE);
  REQUIRE(dse.leader_hessian_sym.size() == 1);
  CHECK(dse.leader_hessian_sym[0] == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(dse.failed_condition.empty());

  auto deg = game::check_dse(examples::motivating_game(), at(0.0, 0.0), 1e-8);
  CHECK(deg.verdict == game::Verdict::StationaryDegenerate);
  CHECK(deg.failed_condition.find("follower Hessian") != std::string::npos);

  for (double a : {-0.5, 0.0, 0.5}) {
    for (double b : {-0.5, 0.0, 0.5}) {
      if (a == 0.0 && b == 0.0) continue;
      CHECK(game::check_dse(tracking(), at(a, b), 1e-8).verdict == game::Verdict::NonStationary);
    }
  }
  auto ns = game::check_dse(examples::motivating_game(), at(0.5, 0.2), 1e-8);
  CHECK(ns.verdict == game::Verdict::NonStationary);
}

TEST_CASE("oracle total derivative") {
  CHECK(examples::oracle_total_derivative(0.5, 0.2) == doctest::Approx(-0.5));
  CHECK(examples::oracle_total_derivative(0.7, -0.42) == doctest::Approx(0.0));
  CHECK(examples::oracle_total_derivative(1.0, 0.0) == doctest::Approx(-0.6));
  CHECK_THROWS_AS(examples::oracle_total_derivative(0.0, 0.3), examples::SingularityError);
  // Symbolic simplification agrees with the unsimplified form.
  auto p = examples::motivating_partials(0.5, 0.2);
  CHECK(p.dj_dtheta - p.d2l_dw_dtheta * p.dj_dw / p.d2l_dw2 == doctest::Approx(-0.5));
}

TEST_CASE("entropic gradient estimates") {
  examples::EntropicGame cfg;
  auto a = examples::entropic_actor_objective_grad(0.3, -0.2, cfg, 5);
  auto b = examples::entropic_actor_objective_grad(0.3, -0.2, cfg, 5);
  CHECK(a == b);

  cfg.eta = 0.0;
  CHECK(examples::entropic_actor_objective_grad(0.4, 0.0, cfg, 1).first == 0.0);
  cfg.sigma = 1e-4;
  const double th = 0.4, w = 0.7;
  const double sech2 = 1.0 / (std::cosh(th) * std::cosh(th));
  CHECK(examples::entropic_actor_objective_grad(th, w, cfg, 2).first ==
        doctest::Approx(w * sech2).epsilon(1e-6));

  // Autodiff over the same samples agrees with the closed form.
  examples::EntropicGame base;
  auto g = examples::entropic_game(base, 9);
  for (auto [t, v] : {std::pair{0.5, 0.5}, {-0.3, 0.8}, {0.9, -0.6}}) {
    auto cf = examples::entropic_actor_objective_grad(t, v, base, 9);
    auto ad = game::individual_gradient(g, at(t, v));
    CHECK(ad.g1[0] == doctest::Approx(cf.first).epsilon(1e-12));
    CHECK(ad.g2[0] == doctest::Approx(cf.second).epsilon(1e-12));
  }
  // Antithetic sampling keeps the origin an exact equilibrium.
  auto origin = examples::entropic_actor_objective_grad(0.0, 0.0, base, 9);
  CHECK(std::abs(origin.first) < 1e-15);
  CHECK(std::abs(origin.second) < 1e-15);
}

TEST_CASE("winding angle and threshold helpers") {
  std::vector<JointPoint> circle;
  for (int k = 0; k <= 100; ++k) {
    const double a = 2 * std::numbers::pi * k / 50.0;
    circle.push_back(at(std::cos(a), std::sin(a)));
  }
  CHECK(examples::winding_angle(circle) == doctest::Approx(4 * std::numbers::pi));
  std::vector<JointPoint> line{at(1, 0), at(0.5, 0), at(0.01, 0)};
  CHECK(examples::steps_to_threshold(line, 1e-3).value() == 2);
  CHECK_FALSE(examples::steps_to_threshold(line, 1e-6).has_value());
}
