#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace stac::linalg {

using Vec = std::vector<double>;

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);
double norm_inf(std::span<const double> a);
/// y += a * x
void axpy(double a, std::span<const double> x, std::span<double> y);
Vec add(std::span<const double> a, std::span<const double> b);
Vec sub(std::span<const double> a, std::span<const double> b);
Vec scaled(std::span<const double> a, double c);

/// Symmetric operator known only through its action.
struct LinearOperator {
  std::size_t dim = 0;
  std::function<Vec(std::span<const double>)> apply;
};

/// Dense row-major matrix as an operator (tests and small games).
LinearOperator dense_operator(std::vector<double> rowmajor, std::size_t n);

class SolverBreakdown : public std::runtime_error {
 public:
  SolverBreakdown(int iteration, double residual);
  int iteration() const { return iteration_; }
  double residual() const { return residual_; }

 private:
  int iteration_;
  double residual_;
};

struct CgResult {
  Vec x;
  int iterations = 0;
  /// ||(A + lambda I) x - v||, tracked by the recurrence.
  double residual = 0.0;
};

/// Conjugate gradient for (A + lambda I) x = v from x0 = 0. Stops once the
/// residual is at most tol * ||v|| or after k iterations.
CgResult cg_solve(const LinearOperator& a, std::span<const double> v, double lambda = 0.0,
                  int k = 10, double tol = 1e-10);

class DegenerateStart : public std::runtime_error {
 public:
  DegenerateStart() : std::runtime_error("power iteration: iterate collapsed to zero") {}
};

struct EigenEstimate {
  double value = 0.0;
  Vec vector;
};

/// Dominant (largest magnitude) eigenpair of a symmetric operator.
EigenEstimate power_iteration(const LinearOperator& a, int iters, std::uint64_t seed);

}  // namespace stac::linalg
