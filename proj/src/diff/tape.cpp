#include "stac/diff/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stac::diff {

namespace {

constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();

bool is_contiguous(std::span<const Var> xs) {
  for (std::size_t k = 1; k < xs.size(); ++k) {
    if (xs[k].index() != xs[0].index() + k) return false;
  }
  return true;
}

}  // namespace

const char* op_name(Op op) {
  switch (op) {
    case Op::Leaf: return "leaf";
    case Op::Constant: return "constant";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Neg: return "neg";
    case Op::Scale: return "scale";
    case Op::AddConst: return "add_const";
    case Op::Recip: return "reciprocal";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::Tanh: return "tanh";
    case Op::Relu: return "relu";
    case Op::Min: return "min";
    case Op::Square: return "square";
    case Op::Sum: return "sum";
    case Op::Dot: return "dot";
    case Op::Affine: return "affine";
  }
  return "unknown";
}

NumericError::NumericError(std::uint32_t node, Op op, const char* pass)
    : std::runtime_error("non-finite value at node " + std::to_string(node) +
                         " (" + op_name(op) + ") during " + pass + " pass"),
      node_(node),
      op_(op) {}

double Var::value() const { return tape_->value(*this); }

Var Tape::push(Op op, double value, std::uint32_t a, std::uint32_t b,
               std::uint32_t n, bool grad, double aux, bool contiguous) {
  const auto index = static_cast<std::uint32_t>(values_.size());
  if (!std::isfinite(value)) throw NumericError(index, op, "forward");
  values_.push_back(value);
  aux_.push_back(aux);
  meta_.push_back(Meta{a, b, n, op, grad, contiguous});
  return Var(this, index);
}

void Tape::check_same_tape(Var v) const {
  if (v.tape() != this) throw std::invalid_argument("Var belongs to a different tape");
}

Var Tape::unary(Op op, Var a, double value, double aux) {
  check_same_tape(a);
  return push(op, value, a.index(), 0, 0, meta_[a.index()].grad, aux);
}

Var Tape::binary(Op op, Var a, Var b, double value) {
  check_same_tape(a);
  check_same_tape(b);
  const bool grad = meta_[a.index()].grad || meta_[b.index()].grad;
  return push(op, value, a.index(), b.index(), 0, grad);
}

Var Tape::constant(double value) { return push(Op::Constant, value, 0, 0, 0, false); }

Var Tape::variable(double value) { return push(Op::Leaf, value, 0, 0, 0, true); }

std::vector<Var> Tape::variables(std::span<const double> values) {
  std::vector<Var> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(variable(v));
  return out;
}

std::vector<Var> Tape::constants(std::span<const double> values) {
  std::vector<Var> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(constant(v));
  return out;
}

Var Tape::one() {
  if (one_ < 0) one_ = constant(1.0).index();
  return Var(this, static_cast<std::uint32_t>(one_));
}

Var Tape::minus_one() {
  if (minus_one_ < 0) minus_one_ = constant(-1.0).index();
  return Var(this, static_cast<std::uint32_t>(minus_one_));
}

Var Tape::add(Var a, Var b) { return binary(Op::Add, a, b, value(a) + value(b)); }
Var Tape::sub(Var a, Var b) { return binary(Op::Sub, a, b, value(a) - value(b)); }
Var Tape::mul(Var a, Var b) { return binary(Op::Mul, a, b, value(a) * value(b)); }
Var Tape::neg(Var a) { return unary(Op::Neg, a, -value(a)); }
Var Tape::scale(Var a, double c) { return unary(Op::Scale, a, c * value(a), c); }
Var Tape::add_const(Var a, double c) { return unary(Op::AddConst, a, value(a) + c, c); }
Var Tape::recip(Var a) { return unary(Op::Recip, a, 1.0 / value(a)); }
Var Tape::exp(Var a) { return unary(Op::Exp, a, std::exp(value(a))); }
Var Tape::log(Var a) { return unary(Op::Log, a, std::log(value(a))); }
Var Tape::tanh(Var a) { return unary(Op::Tanh, a, std::tanh(value(a))); }
Var Tape::relu(Var a) { return unary(Op::Relu, a, value(a) > 0.0 ? value(a) : 0.0); }
Var Tape::square(Var a) { return unary(Op::Square, a, value(a) * value(a)); }

Var Tape::min(Var a, Var b) {
  return binary(Op::Min, a, b, value(a) <= value(b) ? value(a) : value(b));
}

Var Tape::stop_gradient(Var a) { return constant(value(a)); }

Var Tape::sum(std::span<const Var> xs) {
  const auto begin = static_cast<std::uint32_t>(edges_.size());
  double total = 0.0;
  bool grad = false;
  for (Var x : xs) {
    check_same_tape(x);
    edges_.push_back(x.index());
    total += values_[x.index()];
    grad = grad || meta_[x.index()].grad;
  }
  return push(Op::Sum, total, begin, 0, static_cast<std::uint32_t>(xs.size()), grad);
}

Var Tape::dot(std::span<const Var> xs, std::span<const Var> ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("dot: length mismatch");
  std::vector<std::uint32_t> pairs;
  pairs.reserve(2 * xs.size());
  for (std::size_t k = 0; k < xs.size(); ++k) {
    check_same_tape(xs[k]);
    check_same_tape(ys[k]);
    pairs.push_back(xs[k].index());
    pairs.push_back(ys[k].index());
  }
  return dot_indices(pairs);
}

Var Tape::dot_indices(const std::vector<std::uint32_t>& pairs) {
  const auto begin = static_cast<std::uint32_t>(edges_.size());
  double total = 0.0;
  bool grad = false;
  for (std::size_t k = 0; k < pairs.size(); k += 2) {
    total += values_[pairs[k]] * values_[pairs[k + 1]];
    grad = grad || meta_[pairs[k]].grad || meta_[pairs[k + 1]].grad;
  }
  edges_.insert(edges_.end(), pairs.begin(), pairs.end());
  return push(Op::Dot, total, begin, 0, static_cast<std::uint32_t>(pairs.size() / 2), grad);
}

Var Tape::affine(Var bias, std::span<const Var> w, std::span<const Var> x) {
  if (w.size() != x.size()) throw std::invalid_argument("affine: length mismatch");
  check_same_tape(bias);
  const auto n = static_cast<std::uint32_t>(w.size());
  const auto begin = static_cast<std::uint32_t>(edges_.size());
  double total = values_[bias.index()];
  bool grad = meta_[bias.index()].grad;
  for (std::uint32_t k = 0; k < n; ++k) {
    total += values_[w[k].index()] * values_[x[k].index()];
    grad = grad || meta_[w[k].index()].grad || meta_[x[k].index()].grad;
  }
  const bool contiguous = n > 0 && is_contiguous(w) && is_contiguous(x);
  if (contiguous) {
    edges_.push_back(w[0].index());
    edges_.push_back(x[0].index());
  } else {
    for (Var v : w) edges_.push_back(v.index());
    for (Var v : x) edges_.push_back(v.index());
  }
  return push(Op::Affine, total, bias.index(), begin, n, grad, 0.0, contiguous);
}

void Tape::backward(Var out) {
  check_same_tape(out);
  adjoints_.assign(values_.size(), 0.0);
  adjoints_[out.index()] = 1.0;
  reverse_from(out.index());
}

void Tape::backward(std::span<const Var> seeds, std::span<const double> weights) {
  if (seeds.size() != weights.size()) throw std::invalid_argument("backward: seed/weight mismatch");
  adjoints_.assign(values_.size(), 0.0);
  std::uint32_t top = 0;
  for (std::size_t k = 0; k < seeds.size(); ++k) {
    check_same_tape(seeds[k]);
    adjoints_[seeds[k].index()] += weights[k];
    top = std::max(top, seeds[k].index());
  }
  if (!seeds.empty()) reverse_from(top);
}

void Tape::reverse_from(std::uint32_t top) {
  double* adj = adjoints_.data();
  const double* val = values_.data();
  const std::uint32_t* edge = edges_.data();
  for (std::int64_t node = top; node >= 0; --node) {
    const auto i = static_cast<std::uint32_t>(node);
    const double g = adj[i];
    const Meta& m = meta_[i];
    if (g == 0.0 || !m.grad) continue;
    if (!std::isfinite(g)) throw NumericError(i, m.op, "backward");
    switch (m.op) {
      case Op::Leaf:
      case Op::Constant:
        break;
      case Op::Add:
        adj[m.a] += g;
        adj[m.b] += g;
        break;
      case Op::Sub:
        adj[m.a] += g;
        adj[m.b] -= g;
        break;
      case Op::Mul:
        adj[m.a] += g * val[m.b];
        adj[m.b] += g * val[m.a];
        break;
      case Op::Neg:
        adj[m.a] -= g;
        break;
      case Op::Scale:
        adj[m.a] += g * aux_[i];
        break;
      case Op::AddConst:
        adj[m.a] += g;
        break;
      case Op::Recip:
        adj[m.a] -= g * val[i] * val[i];
        break;
      case Op::Exp:
        adj[m.a] += g * val[i];
        break;
      case Op::Log:
        adj[m.a] += g / val[m.a];
        break;
      case Op::Tanh:
        adj[m.a] += g * (1.0 - val[i] * val[i]);
        break;
      case Op::Relu:
        if (val[m.a] > 0.0) adj[m.a] += g;
        break;
      case Op::Min:
        if (val[m.a] <= val[m.b]) {
          adj[m.a] += g;
        } else {
          adj[m.b] += g;
        }
        break;
      case Op::Square:
        adj[m.a] += 2.0 * g * val[m.a];
        break;
      case Op::Sum:
        for (std::uint32_t k = 0; k < m.n; ++k) adj[edge[m.a + k]] += g;
        break;
      case Op::Dot:
        for (std::uint32_t k = 0; k < m.n; ++k) {
          const std::uint32_t p = edge[m.a + 2 * k];
          const std::uint32_t q = edge[m.a + 2 * k + 1];
          adj[p] += g * val[q];
          adj[q] += g * val[p];
        }
        break;
      case Op::Affine:
        adj[m.a] += g;
        if (m.contiguous) {
          const std::uint32_t w0 = edge[m.b];
          const std::uint32_t x0 = edge[m.b + 1];
          double* aw = adj + w0;
          double* ax = adj + x0;
          const double* vw = val + w0;
          const double* vx = val + x0;
          for (std::uint32_t k = 0; k < m.n; ++k) aw[k] += g * vx[k];
          for (std::uint32_t k = 0; k < m.n; ++k) ax[k] += g * vw[k];
        } else {
          for (std::uint32_t k = 0; k < m.n; ++k) {
            const std::uint32_t w = edge[m.b + k];
            const std::uint32_t x = edge[m.b + m.n + k];
            adj[w] += g * val[x];
            adj[x] += g * val[w];
          }
        }
        break;
    }
  }
}

std::vector<double> Tape::adjoints(std::span<const Var> vs) const {
  std::vector<double> out;
  out.reserve(vs.size());
  for (Var v : vs) out.push_back(adjoints_.empty() ? 0.0 : adjoints_[v.index()]);
  return out;
}

std::vector<Var> Tape::gradient_graph(Var out, std::span<const Var> wrt) {
  check_same_tape(out);
  const std::uint32_t n0 = out.index() + 1;

  struct Term {
    std::uint32_t coef;
    std::uint32_t mult;
    std::uint32_t next;
  };
  std::vector<std::uint32_t> head(n0, kNone);
  std::vector<Term> terms;
  terms.reserve(2 * edges_.size() + n0);
  reserve(2 * values_.size(), 2 * edges_.size());

  std::vector<std::int64_t> wrt_pos(n0, -1);
  for (std::size_t k = 0; k < wrt.size(); ++k) {
    check_same_tape(wrt[k]);
    if (wrt[k].index() < n0) wrt_pos[wrt[k].index()] = static_cast<std::int64_t>(k);
  }
  std::vector<Var> result(wrt.size());
  std::vector<bool> filled(wrt.size(), false);

  const std::uint32_t one_idx = one().index();
  const std::uint32_t m1_idx = minus_one().index();

  // Nodes with a path to some wrt leaf; adjoints of the rest are never needed.
  std::vector<char> reach(n0, 0);
  for (std::size_t k = 0; k < wrt.size(); ++k) {
    if (wrt[k].index() < n0 && meta_[wrt[k].index()].grad) reach[wrt[k].index()] = 1;
  }
  for (std::uint32_t i = 0; i < n0; ++i) {
    const Meta& m = meta_[i];
    if (reach[i] || !m.grad) continue;
    char r = 0;
    switch (m.op) {
      case Op::Leaf:
      case Op::Constant:
        break;
      case Op::Add:
      case Op::Sub:
      case Op::Mul:
      case Op::Min:
        r = reach[m.a] || reach[m.b];
        break;
      case Op::Sum:
        for (std::uint32_t k = 0; k < m.n && !r; ++k) r = reach[edges_[m.a + k]];
        break;
      case Op::Dot:
        for (std::uint32_t k = 0; k < 2 * m.n && !r; ++k) r = reach[edges_[m.a + k]];
        break;
      case Op::Affine:
        r = reach[m.a];
        if (m.contiguous) {
          const std::uint32_t w0 = edges_[m.b];
          const std::uint32_t x0 = edges_[m.b + 1];
          for (std::uint32_t k = 0; k < m.n && !r; ++k) r = reach[w0 + k] || reach[x0 + k];
        } else {
          for (std::uint32_t k = 0; k < 2 * m.n && !r; ++k) r = reach[edges_[m.b + k]];
        }
        break;
      default:
        r = reach[m.a];
        break;
    }
    reach[i] = r;
  }

  auto add_term = [&](std::uint32_t target, std::uint32_t coef, std::uint32_t mult) {
    if (!reach[target]) return;
    terms.push_back(Term{coef, mult, head[target]});
    head[target] = static_cast<std::uint32_t>(terms.size() - 1);
  };

  std::vector<std::uint32_t> pairs;
  std::vector<Var> coefs;
  auto materialize = [&](std::uint32_t target) -> Var {
    std::uint32_t t = head[target];
    const Term first = terms[t];
    if (first.next == kNone) {
      if (first.mult == one_idx) return Var(this, first.coef);
      if (first.coef == one_idx) return Var(this, first.mult);
      return mul(Var(this, first.coef), Var(this, first.mult));
    }
    bool all_unit = true;
    pairs.clear();
    for (; t != kNone; t = terms[t].next) {
      pairs.push_back(terms[t].coef);
      pairs.push_back(terms[t].mult);
      all_unit = all_unit && terms[t].mult == one_idx;
    }
    if (all_unit) {
      coefs.clear();
      for (std::size_t k = 0; k < pairs.size(); k += 2) coefs.emplace_back(this, pairs[k]);
      return sum(coefs);
    }
    return dot_indices(pairs);
  };

  add_term(out.index(), one_idx, one_idx);

  for (std::int64_t node = out.index(); node >= 0; --node) {
    const auto i = static_cast<std::uint32_t>(node);
    if (head[i] == kNone) continue;
    const Var g = materialize(i);
    if (wrt_pos[i] >= 0) {
      result[static_cast<std::size_t>(wrt_pos[i])] = g;
      filled[static_cast<std::size_t>(wrt_pos[i])] = true;
    }
    const Meta m = meta_[i];
    const std::uint32_t gi = g.index();
    switch (m.op) {
      case Op::Leaf:
      case Op::Constant:
        break;
      case Op::Add:
        add_term(m.a, gi, one_idx);
        add_term(m.b, gi, one_idx);
        break;
      case Op::Sub:
        add_term(m.a, gi, one_idx);
        add_term(m.b, gi, m1_idx);
        break;
      case Op::Mul:
        add_term(m.a, gi, m.b);
        add_term(m.b, gi, m.a);
        break;
      case Op::Neg:
        add_term(m.a, gi, m1_idx);
        break;
      case Op::Scale:
        if (reach[m.a]) add_term(m.a, gi, constant(aux_[i]).index());
        break;
      case Op::AddConst:
        add_term(m.a, gi, one_idx);
        break;
      case Op::Recip:
        if (reach[m.a]) add_term(m.a, gi, neg(square(Var(this, i))).index());
        break;
      case Op::Exp:
        add_term(m.a, gi, i);
        break;
      case Op::Log:
        if (reach[m.a]) add_term(m.a, gi, recip(Var(this, m.a)).index());
        break;
      case Op::Tanh:
        if (reach[m.a]) {
          add_term(m.a, gi, add_const(neg(square(Var(this, i))), 1.0).index());
        }
        break;
      case Op::Relu:
        if (values_[m.a] > 0.0) add_term(m.a, gi, one_idx);
        break;
      case Op::Min:
        add_term(values_[m.a] <= values_[m.b] ? m.a : m.b, gi, one_idx);
        break;
      case Op::Square:
        if (reach[m.a]) add_term(m.a, gi, scale(Var(this, m.a), 2.0).index());
        break;
      case Op::Sum:
        for (std::uint32_t k = 0; k < m.n; ++k) add_term(edges_[m.a + k], gi, one_idx);
        break;
      case Op::Dot:
        for (std::uint32_t k = 0; k < m.n; ++k) {
          const std::uint32_t p = edges_[m.a + 2 * k];
          const std::uint32_t q = edges_[m.a + 2 * k + 1];
          add_term(p, gi, q);
          add_term(q, gi, p);
        }
        break;
      case Op::Affine:
        add_term(m.a, gi, one_idx);
        for (std::uint32_t k = 0; k < m.n; ++k) {
          std::uint32_t w;
          std::uint32_t x;
          if (m.contiguous) {
            w = edges_[m.b] + k;
            x = edges_[m.b + 1] + k;
          } else {
            w = edges_[m.b + k];
            x = edges_[m.b + m.n + k];
          }
          add_term(w, gi, x);
          add_term(x, gi, w);
        }
        break;
    }
  }

  for (std::size_t k = 0; k < wrt.size(); ++k) {
    if (!filled[k]) result[k] = constant(0.0);
  }
  return result;
}

void Tape::reserve(std::size_t nodes, std::size_t edges) {
  values_.reserve(nodes);
  aux_.reserve(nodes);
  meta_.reserve(nodes);
  edges_.reserve(edges);
}

void Tape::clear() {
  values_.clear();
  aux_.clear();
  meta_.clear();
  edges_.clear();
  adjoints_.clear();
  one_ = -1;
  minus_one_ = -1;
}

namespace {
Tape& tape_of(Var a) { return *a.tape(); }
}  // namespace

Var operator+(Var a, Var b) { return tape_of(a).add(a, b); }
Var operator-(Var a, Var b) { return tape_of(a).sub(a, b); }
Var operator*(Var a, Var b) { return tape_of(a).mul(a, b); }
Var operator/(Var a, Var b) { return tape_of(a).mul(a, tape_of(a).recip(b)); }
Var operator-(Var a) { return tape_of(a).neg(a); }
Var operator+(Var a, double c) { return tape_of(a).add_const(a, c); }
Var operator+(double c, Var a) { return tape_of(a).add_const(a, c); }
Var operator-(Var a, double c) { return tape_of(a).add_const(a, -c); }
Var operator-(double c, Var a) { return tape_of(a).add_const(tape_of(a).neg(a), c); }
Var operator*(Var a, double c) { return tape_of(a).scale(a, c); }
Var operator*(double c, Var a) { return tape_of(a).scale(a, c); }
Var operator/(Var a, double c) { return tape_of(a).scale(a, 1.0 / c); }

Var exp(Var a) { return tape_of(a).exp(a); }
Var log(Var a) { return tape_of(a).log(a); }
Var tanh(Var a) { return tape_of(a).tanh(a); }
Var relu(Var a) { return tape_of(a).relu(a); }
Var min(Var a, Var b) { return tape_of(a).min(a, b); }
Var max(Var a, Var b) { return -tape_of(a).min(-a, -b); }
Var square(Var a) { return tape_of(a).square(a); }

Var softplus(Var a) {
  // relu(a) + log(1 + exp(-|a|)); |a| = relu(a) + relu(-a).
  Tape& t = tape_of(a);
  const Var pos = t.relu(a);
  const Var abs = pos + t.relu(-a);
  return pos + t.log(t.add_const(t.exp(-abs), 1.0));
}

}  // namespace stac::diff
