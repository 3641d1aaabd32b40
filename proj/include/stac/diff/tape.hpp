#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace stac::diff {

enum class Op : std::uint8_t {
  Leaf,
  Constant,
  Add,
  Sub,
  Mul,
  Neg,
  Scale,     // aux * a
  AddConst,  // a + aux
  Recip,
  Exp,
  Log,
  Tanh,
  Relu,
  Min,
  Square,
  Sum,
  Dot,
  Affine,
};

const char* op_name(Op op);

/// Raised when a forward value or a reverse-pass adjoint stops being finite.
class NumericError : public std::runtime_error {
 public:
  NumericError(std::uint32_t node, Op op, const char* pass);

  std::uint32_t node() const { return node_; }
  Op op() const { return op_; }

 private:
  std::uint32_t node_;
  Op op_;
};

class Tape;

/// Handle to a scalar node on a Tape. Cheap to copy; only valid while the
/// tape it points to is alive and has not been cleared.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::uint32_t index) : tape_(tape), index_(index) {}

  double value() const;
  std::uint32_t index() const { return index_; }
  Tape* tape() const { return tape_; }

 private:
  Tape* tape_ = nullptr;
  std::uint32_t index_ = 0;
};

/// Reverse-mode recording of scalar computations.
///
/// Nodes are appended in evaluation order, so every node's inputs precede
/// it. Two reverse passes are provided: `backward` accumulates numeric
/// adjoints; `gradient_graph` records the reverse pass itself as new nodes,
/// which is what makes Hessian-vector and mixed products possible (the
/// second derivative is one more numeric pass over the extended tape).
///
/// relu has zero curvature everywhere. min routes its adjoint to the smaller
/// argument, ties to the first.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(double value);
  Var variable(double value);
  /// Leaves for `values`, allocated as one contiguous index range.
  std::vector<Var> variables(std::span<const double> values);
  std::vector<Var> constants(std::span<const double> values);

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var neg(Var a);
  Var scale(Var a, double c);
  Var add_const(Var a, double c);
  Var recip(Var a);
  Var exp(Var a);
  Var log(Var a);
  Var tanh(Var a);
  Var relu(Var a);
  Var min(Var a, Var b);
  Var square(Var a);
  Var sum(std::span<const Var> xs);
  Var dot(std::span<const Var> xs, std::span<const Var> ys);
  /// bias + <w, x>. Contiguous w and x ranges take a vectorised path.
  Var affine(Var bias, std::span<const Var> w, std::span<const Var> x);
  /// Constant carrying the current value of `a`; blocks all derivatives.
  Var stop_gradient(Var a);

  double value(Var v) const { return values_[v.index()]; }
  double value(std::uint32_t i) const { return values_[i]; }
  bool requires_grad(Var v) const { return meta_[v.index()].grad; }
  std::size_t size() const { return values_.size(); }

  /// Numeric reverse pass seeded with d(out)/d(out) = 1.
  void backward(Var out);
  /// Numeric reverse pass seeded with adjoint `weights[k]` at `seeds[k]`;
  /// computes the gradient of sum_k weights[k] * seeds[k].
  void backward(std::span<const Var> seeds, std::span<const double> weights);
  double adjoint(Var v) const { return adjoints_[v.index()]; }
  std::vector<double> adjoints(std::span<const Var> vs) const;

  /// Reverse pass recorded on the tape: returns nodes holding d(out)/d(wrt_k).
  /// Inputs that do not influence `out` get a zero constant.
  std::vector<Var> gradient_graph(Var out, std::span<const Var> wrt);

  /// Drops all nodes but keeps allocated capacity.
  void clear();
  void reserve(std::size_t nodes, std::size_t edges);

 private:
  struct Meta {
    std::uint32_t a = 0;
    std::uint32_t b = 0;
    std::uint32_t n = 0;
    Op op = Op::Constant;
    bool grad = false;
    bool contiguous = false;
  };

  Var push(Op op, double value, std::uint32_t a, std::uint32_t b,
           std::uint32_t n, bool grad, double aux = 0.0,
           bool contiguous = false);
  Var unary(Op op, Var a, double value, double aux = 0.0);
  Var binary(Op op, Var a, Var b, double value);
  Var one();
  Var minus_one();
  Var dot_indices(const std::vector<std::uint32_t>& pairs);
  void check_same_tape(Var v) const;
  void reverse_from(std::uint32_t top);

  std::vector<double> values_;
  std::vector<double> aux_;
  std::vector<Meta> meta_;
  std::vector<std::uint32_t> edges_;
  std::vector<double> adjoints_;
  std::int64_t one_ = -1;
  std::int64_t minus_one_ = -1;
};

Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);
Var operator/(Var a, Var b);
Var operator-(Var a);
Var operator+(Var a, double c);
Var operator+(double c, Var a);
Var operator-(Var a, double c);
Var operator-(double c, Var a);
Var operator*(Var a, double c);
Var operator*(double c, Var a);
Var operator/(Var a, double c);

Var exp(Var a);
Var log(Var a);
Var tanh(Var a);
Var relu(Var a);
Var min(Var a, Var b);
Var max(Var a, Var b);
Var square(Var a);
/// log(1 + exp(a)) without overflow for large |a|.
Var softplus(Var a);

}  // namespace stac::diff
