#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "stac/diff/param_vector.hpp"
#include "stac/diff/tape.hpp"

namespace stac::diff {

/// Records f(x) on the tape and returns the output node.
using ScalarFn = std::function<Var(Tape&, std::span<const Var>)>;
/// Records f(x1, x2) on the tape.
using PairFn = std::function<Var(Tape&, std::span<const Var>, std::span<const Var>)>;

double evaluate(const ScalarFn& f, const ParamVector& x);
ParamVector gradient(const ScalarFn& f, const ParamVector& x);
/// Hessian-vector product by double backward.
ParamVector hvp(const ScalarFn& f, const ParamVector& x, const ParamVector& v);
/// Gradient in x1 of <grad_{x2} f, q>, q held constant.
ParamVector mixed_vjp(const PairFn& f, const ParamVector& x1, const ParamVector& x2,
                      const ParamVector& q);

enum class Block { First, Second };

/// f(x1, x2) written as a sum of `terms` pieces. `build(tape, x1, x2, b, e)`
/// records the sum of pieces [b, e). Pieces are recorded `chunk` at a time on
/// separate tapes so that large batches never need one huge graph.
struct Objective {
  std::size_t terms = 1;
  std::size_t chunk = 0;  // 0: everything on one tape
  std::function<Var(Tape&, std::span<const Var>, std::span<const Var>, std::size_t,
                    std::size_t)>
      build;

  static Objective from(PairFn f);
};

struct BlockGradients {
  double value = 0.0;
  std::vector<double> g1;
  std::vector<double> g2;
};

/// Value and the requested partial gradients (empty when not requested).
BlockGradients block_gradients(const Objective& f, std::span<const double> x1,
                               std::span<const double> x2, bool want1 = true,
                               bool want2 = true);

std::vector<double> hvp_block(const Objective& f, std::span<const double> x1,
                              std::span<const double> x2, Block block,
                              std::span<const double> v);

/// Gradient in x1 of <grad_{x2} f, q>.
std::vector<double> mixed_vjp(const Objective& f, std::span<const double> x1,
                              std::span<const double> x2, std::span<const double> q);
/// Gradient in x2 of <grad_{x1} f, q>.
std::vector<double> mixed_vjp_transposed(const Objective& f, std::span<const double> x1,
                                         std::span<const double> x2,
                                         std::span<const double> q);

/// v -> (block Hessian of f) v at a fixed point. The gradient graphs are
/// recorded once and reused across applications while they fit in
/// `node_budget` tape nodes; past that each application rebuilds them.
class HessianOperator {
 public:
  HessianOperator(Objective f, std::vector<double> x1, std::vector<double> x2, Block block,
                  std::size_t node_budget = 40'000'000);
  ~HessianOperator();
  HessianOperator(HessianOperator&&) noexcept;
  HessianOperator& operator=(HessianOperator&&) noexcept;

  std::size_t dim() const;
  std::vector<double> apply(std::span<const double> v);
  /// Gradient in the other block of <grad f, q>, the gradient taken in this block.
  std::vector<double> cross(std::span<const double> q);
  bool cached() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace stac::diff
