#include "stac/linalg/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace stac::linalg {

namespace {

void require_same(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw std::invalid_argument(std::string(what) + ": length mismatch");
}

}  // namespace

double dot(std::span<const double> a, std::span<const double> b) {
  require_same(a.size(), b.size(), "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double norm_inf(std::span<const double> a) {
  double m = 0.0;
  for (double x : a) m = std::max(m, std::abs(x));
  return m;
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
  require_same(x.size(), y.size(), "axpy");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

Vec add(std::span<const double> a, std::span<const double> b) {
  require_same(a.size(), b.size(), "add");
  Vec out(a.begin(), a.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

Vec sub(std::span<const double> a, std::span<const double> b) {
  require_same(a.size(), b.size(), "sub");
  Vec out(a.begin(), a.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
  return out;
}

Vec scaled(std::span<const double> a, double c) {
  Vec out(a.begin(), a.end());
  for (double& x : out) x *= c;
  return out;
}

LinearOperator dense_operator(std::vector<double> rowmajor, std::size_t n) {
  if (rowmajor.size() != n * n) throw std::invalid_argument("dense_operator: not n x n");
  LinearOperator op;
  op.dim = n;
  op.apply = [m = std::move(rowmajor), n](std::span<const double> v) {
    Vec out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += m[i * n + j] * v[j];
      out[i] = s;
    }
    return out;
  };
  return op;
}

SolverBreakdown::SolverBreakdown(int iteration, double residual)
    : std::runtime_error("conjugate gradient broke down at iteration " +
                         std::to_string(iteration) + " (residual " +
                         std::to_string(residual) + ")"),
      iteration_(iteration),
      residual_(residual) {}

CgResult cg_solve(const LinearOperator& a, std::span<const double> v, double lambda, int k,
                  double tol) {
  require_same(v.size(), a.dim, "cg_solve");
  if (lambda < 0.0) throw std::invalid_argument("cg_solve: lambda must be nonnegative");
  CgResult res;
  res.x.assign(v.size(), 0.0);
  Vec r(v.begin(), v.end());
  Vec p = r;
  double rr = dot(r, r);
  const double target = tol * std::sqrt(rr);
  res.residual = std::sqrt(rr);
  if (!std::isfinite(rr)) throw SolverBreakdown(0, res.residual);
  for (int it = 0; it < k; ++it) {
    if (res.residual <= target) break;
    Vec ap = a.apply(p);
    require_same(ap.size(), p.size(), "cg_solve operator");
    if (lambda != 0.0) axpy(lambda, p, ap);
    const double pap = dot(p, ap);
    if (!std::isfinite(pap) || pap == 0.0) throw SolverBreakdown(it, res.residual);
    const double alpha = rr / pap;
    axpy(alpha, p, res.x);
    axpy(-alpha, ap, r);
    const double rr_next = dot(r, r);
    res.iterations = it + 1;
    if (!std::isfinite(rr_next)) throw SolverBreakdown(it, res.residual);
    res.residual = std::sqrt(rr_next);
    const double beta = rr_next / rr;
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = r[i] + beta * p[i];
    rr = rr_next;
  }
  return res;
}

EigenEstimate power_iteration(const LinearOperator& a, int iters, std::uint64_t seed) {
  if (iters <= 0) throw std::invalid_argument("power_iteration: iters must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Vec x(a.dim);
  for (double& xi : x) xi = normal(rng);
  double nx = norm(x);
  if (nx == 0.0) throw DegenerateStart();
  for (double& xi : x) xi /= nx;
  EigenEstimate est;
  for (int it = 0; it < iters; ++it) {
    Vec y = a.apply(x);
    const double ny = norm(y);
    if (ny == 0.0 || !std::isfinite(ny)) throw DegenerateStart();
    for (double& yi : y) yi /= ny;
    x = std::move(y);
  }
  // Rayleigh-Ritz on span{x, Ax}: separates a dominant pair +-lambda that
  // plain power iteration only mixes.
  const Vec ax = a.apply(x);
  const double t11 = dot(x, ax);
  Vec u = ax;
  axpy(-t11, x, u);
  const double nu = norm(u);
  if (nu <= 1e-14 * norm(ax)) {
    est.value = t11;
    est.vector = std::move(x);
    return est;
  }
  for (double& ui : u) ui /= nu;
  const Vec au = a.apply(u);
  const double t12 = dot(x, au);
  const double t22 = dot(u, au);
  const double mid = 0.5 * (t11 + t22);
  const double rad = std::hypot(0.5 * (t11 - t22), t12);
  const double lo = mid - rad, hi = mid + rad;
  est.value = std::abs(hi) >= std::abs(lo) ? hi : lo;
  // Eigenvector of [[t11, t12], [t12, t22]] for est.value.
  double c1 = t12, c2 = est.value - t11;
  if (std::abs(c1) + std::abs(c2) < 1e-300) {
    c1 = 1.0;
    c2 = 0.0;
  }
  const double nc = std::hypot(c1, c2);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = (c1 * x[i] + c2 * u[i]) / nc;
  est.vector = std::move(x);
  return est;
}

}  // namespace stac::linalg
