#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "doctest.h"
#include "stac/linalg/linalg.hpp"

using namespace stac::linalg;

namespace {

Eigen::MatrixXd random_spd(std::mt19937_64& rng, int n, double shift = 0.5) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd b(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) b(i, j) = g(rng);
  return b * b.transpose() / n + shift * Eigen::MatrixXd::Identity(n, n);
}

LinearOperator as_operator(const Eigen::MatrixXd& m) {
  std::vector<double> rows(static_cast<std::size_t>(m.size()));
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) rows[static_cast<std::size_t>(i * m.cols() + j)] = m(i, j);
  return dense_operator(rows, static_cast<std::size_t>(m.rows()));
}

Vec to_vec(const Eigen::VectorXd& v) { return Vec(v.data(), v.data() + v.size()); }

Eigen::VectorXd from_vec(const Vec& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

TEST_CASE("identity system solves in one iteration") {
  auto op = dense_operator({1, 0, 0, 0, 1, 0, 0, 0, 1}, 3);
  Vec v{0.3, -2.0, 5.0};
  auto r = cg_solve(op, v, 0.0, 10, 1e-10);
  CHECK(r.iterations == 1);
  for (int i = 0; i < 3; ++i) CHECK(r.x[i] == doctest::Approx(v[i]));
}

TEST_CASE("diagonal solve") {
  auto op = dense_operator({2, 0, 0, 4}, 2);
  auto r = cg_solve(op, Vec{2, 4});
  CHECK(r.x[0] == doctest::Approx(1.0));
  CHECK(r.x[1] == doctest::Approx(1.0));
}

TEST_CASE("zero right-hand side gives zero") {
  auto op = dense_operator({2, 0, 0, 4}, 2);
  auto r = cg_solve(op, Vec{0, 0});
  CHECK(r.iterations == 0);
  CHECK(r.x == Vec{0, 0});
}

TEST_CASE("random SPD systems match a dense solve") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 10; ++trial) {
    auto a = random_spd(rng, 10);
    Eigen::VectorXd v(10);
    for (int i = 0; i < 10; ++i) v(i) = g(rng);
    const double lambda = 0.1;
    Eigen::VectorXd direct =
        (a + lambda * Eigen::MatrixXd::Identity(10, 10)).ldlt().solve(v);
    auto r = cg_solve(as_operator(a), to_vec(v), lambda, 50, 0.0);
    CHECK((from_vec(r.x) - direct).norm() <= 1e-8 * direct.norm());
  }
}

TEST_CASE("CG error decreases monotonically in the A-norm") {
  std::mt19937_64 rng(4);
  auto a = random_spd(rng, 12, 0.05);
  Eigen::VectorXd v = Eigen::VectorXd::Ones(12);
  Eigen::VectorXd exact = a.ldlt().solve(v);
  double prev = std::sqrt(exact.dot(a * exact));
  for (int k = 1; k <= 12; ++k) {
    auto r = cg_solve(as_operator(a), to_vec(v), 0.0, k, 0.0);
    Eigen::VectorXd e = from_vec(r.x) - exact;
    const double cur = std::sqrt(e.dot(a * e));
    CHECK(cur <= prev * (1 + 1e-12) + 1e-14);
    prev = cur;
  }
}

TEST_CASE("regularisation shrinks the solution") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 10; ++trial) {
    auto a = random_spd(rng, 8, 0.01);
    Eigen::VectorXd v(8);
    for (int i = 0; i < 8; ++i) v(i) = g(rng);
    const double l1 = 0.01 * trial, l2 = l1 + 0.5;
    auto x1 = cg_solve(as_operator(a), to_vec(v), l1, 100, 0.0).x;
    auto x2 = cg_solve(as_operator(a), to_vec(v), l2, 100, 0.0).x;
    CHECK(norm(x2) <= norm(x1) * (1 + 1e-10));
  }
}

TEST_CASE("exact in n steps") {
  std::mt19937_64 rng(6);
  auto a = random_spd(rng, 6);
  Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(6, -1, 1);
  Eigen::VectorXd direct = a.ldlt().solve(v);
  auto r = cg_solve(as_operator(a), to_vec(v), 0.0, 6, 0.0);
  CHECK((from_vec(r.x) - direct).norm() <= 1e-8 * direct.norm());
}

TEST_CASE("singular operator breaks down with the iteration index") {
  auto op = dense_operator({0, 0, 0, 0}, 2);
  try {
    cg_solve(op, Vec{1, 1});
    FAIL("expected breakdown");
  } catch (const SolverBreakdown& e) {
    CHECK(e.iteration() == 0);
    CHECK(e.residual() == doctest::Approx(std::sqrt(2.0)));
  }
}

TEST_CASE("power iteration on simple operators") {
  auto d = power_iteration(dense_operator({3, 0, 0, 1}, 2), 200, 1);
  CHECK(d.value == doctest::Approx(3.0));
  CHECK(std::abs(d.vector[0]) == doctest::Approx(1.0));
  auto id = power_iteration(dense_operator({1, 0, 0, 1}, 2), 5, 2);
  CHECK(id.value == doctest::Approx(1.0));
  CHECK(norm(id.vector) == doctest::Approx(1.0));
  CHECK_THROWS_AS(power_iteration(dense_operator({0, 0, 0, 0}, 2), 5, 2), DegenerateStart);
}

TEST_CASE("power iteration matches a dense eigensolver") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::MatrixXd b(8, 8);
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j) b(i, j) = g(rng);
    Eigen::MatrixXd s = (b + b.transpose()) / 2;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
    const double top = es.eigenvalues().cwiseAbs().maxCoeff();
    auto est = power_iteration(as_operator(s), 500, 100 + trial);
    CHECK(std::abs(std::abs(est.value) - top) <= 1e-4 * top);
  }
}
