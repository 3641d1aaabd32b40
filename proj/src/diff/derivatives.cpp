#include "stac/diff/derivatives.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>
#include <utility>

namespace stac::diff {

namespace {

void require_size(std::size_t got, std::size_t want, const char* what) {
  if (got != want) throw std::invalid_argument(std::string(what) + ": length mismatch");
}

template <typename Fn>
void for_each_chunk(const Objective& f, Fn&& fn) {
  const std::size_t step = f.chunk == 0 ? f.terms : f.chunk;
  if (f.terms == 0) return;
  for (std::size_t b = 0; b < f.terms; b += step) fn(b, std::min(f.terms, b + step));
}

std::vector<Var> leaves(Tape& t, std::span<const double> x, bool variable) {
  return variable ? t.variables(x) : t.constants(x);
}

void accumulate(std::vector<double>& acc, const std::vector<double>& add) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += add[i];
}

ParamVector like(const ParamVector& shape, std::vector<double> data) {
  return ParamVector(std::move(data), shape.layout());
}

}  // namespace

double evaluate(const ScalarFn& f, const ParamVector& x) {
  Tape t;
  const auto xs = t.constants(x.values());
  return f(t, xs).value();
}

ParamVector gradient(const ScalarFn& f, const ParamVector& x) {
  Tape t;
  const auto xs = t.variables(x.values());
  t.backward(f(t, xs));
  return like(x, t.adjoints(xs));
}

ParamVector hvp(const ScalarFn& f, const ParamVector& x, const ParamVector& v) {
  require_size(v.size(), x.size(), "hvp");
  Tape t;
  const auto xs = t.variables(x.values());
  const auto g = t.gradient_graph(f(t, xs), xs);
  t.backward(g, v.values());
  return like(x, t.adjoints(xs));
}

ParamVector mixed_vjp(const PairFn& f, const ParamVector& x1, const ParamVector& x2,
                      const ParamVector& q) {
  return like(x1, mixed_vjp(Objective::from(f), x1.values(), x2.values(), q.values()));
}

Objective Objective::from(PairFn f) {
  Objective o;
  o.terms = 1;
  o.build = [f = std::move(f)](Tape& t, std::span<const Var> a, std::span<const Var> b,
                               std::size_t, std::size_t) { return f(t, a, b); };
  return o;
}

BlockGradients block_gradients(const Objective& f, std::span<const double> x1,
                               std::span<const double> x2, bool want1, bool want2) {
  BlockGradients out;
  if (want1) out.g1.assign(x1.size(), 0.0);
  if (want2) out.g2.assign(x2.size(), 0.0);
  Tape t;
  for_each_chunk(f, [&](std::size_t b, std::size_t e) {
    t.clear();
    const auto v1 = leaves(t, x1, want1);
    const auto v2 = leaves(t, x2, want2);
    const Var y = f.build(t, v1, v2, b, e);
    out.value += y.value();
    if (!want1 && !want2) return;
    t.backward(y);
    if (want1) accumulate(out.g1, t.adjoints(v1));
    if (want2) accumulate(out.g2, t.adjoints(v2));
  });
  return out;
}

std::vector<double> hvp_block(const Objective& f, std::span<const double> x1,
                              std::span<const double> x2, Block block,
                              std::span<const double> v) {
  HessianOperator h(f, {x1.begin(), x1.end()}, {x2.begin(), x2.end()}, block, 0);
  return h.apply(v);
}

namespace {

std::vector<double> mixed_impl(const Objective& f, std::span<const double> x1,
                               std::span<const double> x2, std::span<const double> q,
                               Block inner) {
  const bool first = inner == Block::First;
  require_size(q.size(), first ? x1.size() : x2.size(), "mixed_vjp");
  std::vector<double> out(first ? x2.size() : x1.size(), 0.0);
  Tape t;
  for_each_chunk(f, [&](std::size_t b, std::size_t e) {
    t.clear();
    const auto v1 = t.variables(x1);
    const auto v2 = t.variables(x2);
    const Var y = f.build(t, v1, v2, b, e);
    const auto g = t.gradient_graph(y, first ? v1 : v2);
    t.backward(g, q);
    accumulate(out, t.adjoints(first ? v2 : v1));
  });
  return out;
}

}  // namespace

std::vector<double> mixed_vjp(const Objective& f, std::span<const double> x1,
                              std::span<const double> x2, std::span<const double> q) {
  return mixed_impl(f, x1, x2, q, Block::Second);
}

std::vector<double> mixed_vjp_transposed(const Objective& f, std::span<const double> x1,
                                         std::span<const double> x2,
                                         std::span<const double> q) {
  return mixed_impl(f, x1, x2, q, Block::First);
}

struct HessianOperator::Impl {
  Objective f;
  std::vector<double> x1;
  std::vector<double> x2;
  Block block;
  std::size_t budget;

  struct Chunk {
    std::unique_ptr<Tape> tape;
    std::vector<Var> wrt;
    std::vector<Var> other;
    std::vector<Var> grad;
  };
  std::vector<Chunk> chunks;
  bool cached = false;

  std::span<const double> own() const { return block == Block::First ? x1 : x2; }

  Chunk record(std::size_t b, std::size_t e, std::unique_ptr<Tape> tape) const {
    tape->clear();
    const bool first = block == Block::First;
    const auto v1 = tape->variables(x1);
    const auto v2 = tape->variables(x2);
    const Var y = f.build(*tape, v1, v2, b, e);
    Chunk c;
    c.wrt = first ? v1 : v2;
    c.other = first ? v2 : v1;
    c.grad = tape->gradient_graph(y, c.wrt);
    c.tape = std::move(tape);
    return c;
  }

  void try_cache() {
    if (budget == 0) return;
    std::size_t nodes = 0;
    bool fits = true;
    for_each_chunk(f, [&](std::size_t b, std::size_t e) {
      if (!fits) return;
      chunks.push_back(record(b, e, std::make_unique<Tape>()));
      nodes += chunks.back().tape->size();
      if (nodes > budget) fits = false;
    });
    if (!fits) {
      chunks.clear();
      return;
    }
    cached = true;
  }

  static void apply_chunk(Chunk& c, std::span<const double> v, std::vector<double>& out,
                          bool cross) {
    c.tape->backward(c.grad, v);
    accumulate(out, c.tape->adjoints(cross ? c.other : c.wrt));
  }

  std::vector<double> run(std::span<const double> v, bool cross) {
    const bool first = block == Block::First;
    std::vector<double> out(cross == first ? x2.size() : x1.size(), 0.0);
    if (cached) {
      for (auto& c : chunks) apply_chunk(c, v, out, cross);
      return out;
    }
    auto tape = std::make_unique<Tape>();
    for_each_chunk(f, [&](std::size_t b, std::size_t e) {
      auto c = record(b, e, std::move(tape));
      apply_chunk(c, v, out, cross);
      tape = std::move(c.tape);
    });
    return out;
  }
};

HessianOperator::HessianOperator(Objective f, std::vector<double> x1, std::vector<double> x2,
                                 Block block, std::size_t node_budget)
    : impl_(std::make_unique<Impl>()) {
  impl_->f = std::move(f);
  impl_->x1 = std::move(x1);
  impl_->x2 = std::move(x2);
  impl_->block = block;
  impl_->budget = node_budget;
  impl_->try_cache();
}

HessianOperator::~HessianOperator() = default;
HessianOperator::HessianOperator(HessianOperator&&) noexcept = default;
HessianOperator& HessianOperator::operator=(HessianOperator&&) noexcept = default;

std::size_t HessianOperator::dim() const { return impl_->own().size(); }

bool HessianOperator::cached() const { return impl_->cached; }

std::vector<double> HessianOperator::apply(std::span<const double> v) {
  require_size(v.size(), dim(), "HessianOperator::apply");
  return impl_->run(v, false);
}

std::vector<double> HessianOperator::cross(std::span<const double> q) {
  require_size(q.size(), dim(), "HessianOperator::cross");
  return impl_->run(q, true);
}

}  // namespace stac::diff
