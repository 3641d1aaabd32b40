#include "stac/nets/nets.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace stac::nets {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * log(2 pi)

Var activate(Tape& t, Activation a, Var x) {
  switch (a) {
    case Activation::Tanh: return t.tanh(x);
    case Activation::Relu: return t.relu(x);
    case Activation::Identity: return x;
  }
  return x;
}

double activate(Activation a, double x) {
  switch (a) {
    case Activation::Tanh: return std::tanh(x);
    case Activation::Relu: return x > 0.0 ? x : 0.0;
    case Activation::Identity: return x;
  }
  return x;
}

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

// log(scale * (1 - tanh(u)^2)) = log(scale) + 2 (log 2 - u - softplus(-2u)).
Var log_squash_jacobian(Tape& t, Var u, double scale) {
  Var sp = diff::softplus(t.scale(u, -2.0));
  return t.add_const(t.scale(t.add(u, sp), -2.0), 2.0 * std::numbers::ln2 + std::log(scale));
}

std::vector<Var> obs_constants(Tape& t, std::span<const double> s) { return t.constants(s); }

void check_obs(const Policy& p, std::size_t n) {
  if (n != p.mlp.in) throw std::invalid_argument("policy: observation has wrong length");
}

}  // namespace

Activation parse_activation(const std::string& name) {
  if (name == "tanh") return Activation::Tanh;
  if (name == "relu") return Activation::Relu;
  if (name == "identity" || name == "linear") return Activation::Identity;
  throw std::invalid_argument("unknown activation '" + name + "'");
}

MLPSpec MLPSpec::make(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out,
                      Activation hidden_act, Activation out_act) {
  MLPSpec s;
  s.in = in;
  s.widths = hidden;
  s.widths.push_back(out);
  s.activations.assign(hidden.size(), hidden_act);
  s.activations.push_back(out_act);
  s.validate();
  return s;
}

void MLPSpec::validate() const {
  require(in > 0, "MLPSpec: input width must be positive");
  require(!widths.empty(), "MLPSpec: no layers");
  require(widths.size() == activations.size(), "MLPSpec: one activation per layer");
  for (auto w : widths) require(w > 0, "MLPSpec: layer widths must be positive");
}

std::size_t MLPSpec::n_params() const {
  std::size_t n = 0, fan_in = in;
  for (auto w : widths) {
    n += w * fan_in + w;
    fan_in = w;
  }
  return n;
}

std::vector<diff::Segment> MLPSpec::layout(const std::string& prefix) const {
  std::vector<std::pair<std::string, std::size_t>> parts;
  std::size_t fan_in = in;
  for (std::size_t k = 0; k < widths.size(); ++k) {
    parts.emplace_back(prefix + "l" + std::to_string(k) + ".w", widths[k] * fan_in);
    parts.emplace_back(prefix + "l" + std::to_string(k) + ".b", widths[k]);
    fan_in = widths[k];
  }
  return diff::make_layout(parts);
}

ParamVector init_params(const MLPSpec& spec, Rng& rng, const std::string& prefix) {
  spec.validate();
  std::vector<double> data;
  data.reserve(spec.n_params());
  std::size_t fan_in = spec.in;
  for (auto w : spec.widths) {
    const double b = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-b, b);
    for (std::size_t i = 0; i < w * fan_in; ++i) data.push_back(u(rng));
    data.insert(data.end(), w, 0.0);
    fan_in = w;
  }
  return ParamVector(std::move(data), spec.layout(prefix));
}

std::vector<Var> forward(Tape& t, const MLPSpec& spec, std::span<const Var> params,
                         std::span<const Var> x) {
  require(params.size() == spec.n_params(), "forward: parameter count mismatch");
  require(x.size() == spec.in, "forward: input width mismatch");
  std::vector<Var> cur(x.begin(), x.end()), pre, next;
  std::size_t off = 0, fan_in = spec.in;
  for (std::size_t k = 0; k < spec.widths.size(); ++k) {
    const std::size_t w = spec.widths[k];
    const auto weights = params.subspan(off, w * fan_in);
    const auto biases = params.subspan(off + w * fan_in, w);
    pre.clear();
    for (std::size_t j = 0; j < w; ++j)
      pre.push_back(t.affine(biases[j], weights.subspan(j * fan_in, fan_in), cur));
    if (spec.activations[k] == Activation::Identity) {
      cur = pre;
    } else {
      next.clear();
      for (Var v : pre) next.push_back(activate(t, spec.activations[k], v));
      cur = next;
    }
    off += w * fan_in + w;
    fan_in = w;
  }
  return cur;
}

std::vector<double> evaluate(const MLPSpec& spec, std::span<const double> params,
                             std::span<const double> x) {
  require(params.size() == spec.n_params(), "evaluate: parameter count mismatch");
  require(x.size() == spec.in, "evaluate: input width mismatch");
  std::vector<double> cur(x.begin(), x.end()), next;
  std::size_t off = 0, fan_in = spec.in;
  for (std::size_t k = 0; k < spec.widths.size(); ++k) {
    const std::size_t w = spec.widths[k];
    const double* wt = params.data() + off;
    const double* b = wt + w * fan_in;
    next.assign(w, 0.0);
    for (std::size_t j = 0; j < w; ++j) {
      double s = b[j];
      const double* row = wt + j * fan_in;
      for (std::size_t i = 0; i < fan_in; ++i) s += row[i] * cur[i];
      next[j] = activate(spec.activations[k], s);
    }
    cur.swap(next);
    off += w * fan_in + w;
    fan_in = w;
  }
  return cur;
}

Policy Policy::categorical(std::size_t obs_dim, std::size_t n_actions,
                           const std::vector<std::size_t>& hidden, Activation act) {
  require(n_actions >= 2, "categorical policy needs at least two actions");
  Policy p;
  p.kind = PolicyKind::Categorical;
  p.mlp = MLPSpec::make(obs_dim, hidden, n_actions, act);
  p.act_dim = n_actions;
  return p;
}

Policy Policy::gaussian_tanh(std::size_t obs_dim, std::size_t act_dim, double scale,
                             const std::vector<std::size_t>& hidden, Activation act) {
  require(scale > 0.0, "action scale must be positive");
  Policy p;
  p.kind = PolicyKind::GaussianTanh;
  p.mlp = MLPSpec::make(obs_dim, hidden, 2 * act_dim, act);
  p.act_dim = act_dim;
  p.action_scale = scale;
  return p;
}

Policy Policy::deterministic(std::size_t obs_dim, std::size_t act_dim, double scale,
                             const std::vector<std::size_t>& hidden, Activation act) {
  require(scale > 0.0, "action scale must be positive");
  Policy p;
  p.kind = PolicyKind::Deterministic;
  p.mlp = MLPSpec::make(obs_dim, hidden, act_dim, act, Activation::Tanh);
  p.act_dim = act_dim;
  p.action_scale = scale;
  return p;
}

namespace {

// log-softmax with the max shift taken as a constant.
std::vector<Var> log_softmax(Tape& t, const std::vector<Var>& logits) {
  double m = -std::numeric_limits<double>::infinity();
  for (Var l : logits) m = std::max(m, t.value(l));
  std::vector<Var> ex;
  ex.reserve(logits.size());
  for (Var l : logits) ex.push_back(t.exp(t.add_const(l, -m)));
  Var lse = t.add_const(t.log(t.sum(ex)), m);
  std::vector<Var> out;
  out.reserve(logits.size());
  for (Var l : logits) out.push_back(t.sub(l, lse));
  return out;
}

Var gaussian_log_prob(Tape& t, const Policy& p, const std::vector<Var>& head,
                      std::span<const Var> u_nodes, std::span<const double> u_vals) {
  const std::size_t d = p.act_dim;
  std::vector<Var> terms;
  for (std::size_t i = 0; i < d; ++i) {
    Var mean = head[i];
    // clamp log-sigma into [kLogStdMin, kLogStdMax]
    Var ls = head[d + i];
    Var lo = t.constant(kLogStdMin), hi = t.constant(kLogStdMax);
    ls = diff::max(diff::min(ls, hi), lo);
    Var u = u_nodes.empty() ? t.constant(u_vals[i]) : u_nodes[i];
    Var z = t.mul(t.sub(u, mean), t.exp(t.neg(ls)));
    Var lp = t.add_const(t.neg(t.add(t.scale(t.square(z), 0.5), ls)), -kHalfLog2Pi);
    terms.push_back(t.sub(lp, log_squash_jacobian(t, u, p.action_scale)));
  }
  return t.sum(terms);
}

}  // namespace

std::vector<Var> log_probs(Tape& t, const Policy& p, std::span<const Var> params,
                           std::span<const double> s) {
  if (p.kind != PolicyKind::Categorical) throw KindError("log_probs: categorical policies only");
  check_obs(p, s.size());
  auto x = obs_constants(t, s);
  return log_softmax(t, forward(t, p.mlp, params, x));
}

Var log_prob(Tape& t, const Policy& p, std::span<const Var> params, std::span<const double> s,
             std::span<const double> a, std::span<const double> u) {
  check_obs(p, s.size());
  switch (p.kind) {
    case PolicyKind::Categorical: {
      require(a.size() == 1, "categorical action is a single index");
      const double idx = a[0];
      if (idx < 0 || idx >= static_cast<double>(p.act_dim) || idx != std::floor(idx))
        throw std::out_of_range("categorical action index out of range");
      return log_probs(t, p, params, s)[static_cast<std::size_t>(idx)];
    }
    case PolicyKind::GaussianTanh: {
      require(a.size() == p.act_dim, "action has wrong dimension");
      std::vector<double> pre(p.act_dim);
      if (!u.empty()) {
        require(u.size() == p.act_dim, "pre-squash action has wrong dimension");
        std::copy(u.begin(), u.end(), pre.begin());
      } else {
        for (std::size_t i = 0; i < p.act_dim; ++i) {
          const double y = a[i] / p.action_scale;
          if (!(std::abs(y) < 1.0))
            throw std::domain_error("log_prob: action on the boundary of the box");
          pre[i] = std::atanh(y);
        }
      }
      auto x = obs_constants(t, s);
      auto head = forward(t, p.mlp, params, x);
      return gaussian_log_prob(t, p, head, {}, pre);
    }
    case PolicyKind::Deterministic:
      throw KindError("log_prob: deterministic policies have no density");
  }
  throw KindError("log_prob: unknown policy kind");
}

std::vector<double> categorical_probs(const Policy& p, std::span<const double> params,
                                      std::span<const double> s) {
  if (p.kind != PolicyKind::Categorical) throw KindError("categorical_probs: wrong kind");
  check_obs(p, s.size());
  auto logits = evaluate(p.mlp, params, s);
  const double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double& l : logits) z += (l = std::exp(l - m));
  for (double& l : logits) l /= z;
  return logits;
}

Sample sample(const Policy& p, std::span<const double> params, std::span<const double> s,
              Rng& rng) {
  check_obs(p, s.size());
  Sample out;
  switch (p.kind) {
    case PolicyKind::Categorical: {
      auto probs = categorical_probs(p, params, s);
      std::discrete_distribution<std::size_t> d(probs.begin(), probs.end());
      out.a = {static_cast<double>(d(rng))};
      return out;
    }
    case PolicyKind::GaussianTanh: {
      auto head = evaluate(p.mlp, params, s);
      std::normal_distribution<double> n;
      for (std::size_t i = 0; i < p.act_dim; ++i) {
        const double ls = std::clamp(head[p.act_dim + i], kLogStdMin, kLogStdMax);
        const double u = head[i] + std::exp(ls) * n(rng);
        out.u.push_back(u);
        out.a.push_back(p.action_scale * std::tanh(u));
      }
      return out;
    }
    case PolicyKind::Deterministic:
      out.a = mean_action(p, params, s);
      return out;
  }
  return out;
}

Sample sample(const Policy& p, std::span<const double> params, std::span<const double> s,
              std::uint64_t seed) {
  Rng rng(seed);
  return sample(p, params, s, rng);
}

std::vector<double> mean_action(const Policy& p, std::span<const double> params,
                                std::span<const double> s) {
  check_obs(p, s.size());
  auto head = evaluate(p.mlp, params, s);
  switch (p.kind) {
    case PolicyKind::Categorical:
      return {static_cast<double>(std::max_element(head.begin(), head.end()) - head.begin())};
    case PolicyKind::GaussianTanh: {
      std::vector<double> a(p.act_dim);
      for (std::size_t i = 0; i < p.act_dim; ++i) a[i] = p.action_scale * std::tanh(head[i]);
      return a;
    }
    case PolicyKind::Deterministic:
      for (double& v : head) v *= p.action_scale;
      return head;
  }
  return head;
}

RSample rsample(Tape& t, const Policy& p, std::span<const Var> params, std::span<const Var> s,
                std::span<const double> eps) {
  require(s.size() == p.mlp.in, "rsample: observation has wrong length");
  auto head = forward(t, p.mlp, params, s);
  RSample out;
  switch (p.kind) {
    case PolicyKind::Categorical:
      throw KindError("rsample: categorical actions are not reparameterisable");
    case PolicyKind::Deterministic:
      for (Var v : head) out.a.push_back(t.scale(v, p.action_scale));
      return out;
    case PolicyKind::GaussianTanh: {
      require(eps.size() == p.act_dim, "rsample: noise has wrong dimension");
      std::vector<Var> u;
      for (std::size_t i = 0; i < p.act_dim; ++i) {
        Var ls = head[p.act_dim + i];
        ls = diff::max(diff::min(ls, t.constant(kLogStdMax)), t.constant(kLogStdMin));
        u.push_back(t.add(head[i], t.scale(t.exp(ls), eps[i])));
      }
      for (Var ui : u) out.a.push_back(t.scale(t.tanh(ui), p.action_scale));
      out.log_prob = gaussian_log_prob(t, p, head, u, {});
      return out;
    }
  }
  return out;
}

RSample rsample(Tape& t, const Policy& p, std::span<const Var> params, std::span<const double> s,
                std::span<const double> eps) {
  auto x = obs_constants(t, s);
  return rsample(t, p, params, x, eps);
}

Critic Critic::value(std::size_t obs_dim, const std::vector<std::size_t>& hidden,
                     Activation act) {
  Critic c;
  c.kind = CriticKind::V;
  c.mlp = MLPSpec::make(obs_dim, hidden, 1, act);
  return c;
}

Critic Critic::q(std::size_t obs_dim, std::size_t act_dim, const std::vector<std::size_t>& hidden,
                 Activation act, bool twin) {
  Critic c;
  c.kind = twin ? CriticKind::DoubleQ : CriticKind::Q;
  c.mlp = MLPSpec::make(obs_dim + act_dim, hidden, 1, act);
  return c;
}

ParamVector Critic::init(Rng& rng) const {
  if (kind != CriticKind::DoubleQ) return init_params(mlp, rng, kind == CriticKind::V ? "v." : "q.");
  auto a = init_params(mlp, rng, "q1.");
  auto b = init_params(mlp, rng, "q2.");
  return ParamVector::concat(a, b);
}

Var value(Tape& t, const Critic& c, std::span<const Var> w, std::span<const double> s) {
  if (c.kind != CriticKind::V) throw KindError("value: not a state-value critic");
  require(w.size() == c.n_params(), "value: parameter count mismatch");
  auto x = t.constants(s);
  return forward(t, c.mlp, w, x)[0];
}

std::vector<Var> q_values(Tape& t, const Critic& c, std::span<const Var> w,
                          std::span<const double> s, std::span<const Var> a) {
  if (c.kind == CriticKind::V) throw KindError("q_values: state-value critic");
  require(w.size() == c.n_params(), "q_values: parameter count mismatch");
  require(s.size() + a.size() == c.mlp.in, "q_values: input width mismatch");
  // Copies of the action nodes sit right after the state constants so the
  // first layer sees one contiguous input range.
  std::vector<Var> x = t.constants(s);
  for (Var ai : a) x.push_back(t.add_const(ai, 0.0));
  std::vector<Var> out;
  const std::size_t n = c.mlp.n_params();
  for (std::size_t h = 0; h < c.heads(); ++h) out.push_back(forward(t, c.mlp, w.subspan(h * n, n), x)[0]);
  return out;
}

std::vector<Var> q_values(Tape& t, const Critic& c, std::span<const Var> w,
                          std::span<const double> s, std::span<const double> a) {
  if (c.kind == CriticKind::V) throw KindError("q_values: state-value critic");
  std::vector<double> in(s.begin(), s.end());
  in.insert(in.end(), a.begin(), a.end());
  require(in.size() == c.mlp.in, "q_values: input width mismatch");
  auto x = t.constants(in);
  std::vector<Var> out;
  const std::size_t n = c.mlp.n_params();
  for (std::size_t h = 0; h < c.heads(); ++h) out.push_back(forward(t, c.mlp, w.subspan(h * n, n), x)[0]);
  return out;
}

double value(const Critic& c, std::span<const double> w, std::span<const double> s) {
  if (c.kind != CriticKind::V) throw KindError("value: not a state-value critic");
  return evaluate(c.mlp, w, s)[0];
}

std::vector<double> q_values(const Critic& c, std::span<const double> w,
                             std::span<const double> s, std::span<const double> a) {
  if (c.kind == CriticKind::V) throw KindError("q_values: state-value critic");
  std::vector<double> in(s.begin(), s.end());
  in.insert(in.end(), a.begin(), a.end());
  std::vector<double> out;
  const std::size_t n = c.mlp.n_params();
  for (std::size_t h = 0; h < c.heads(); ++h) out.push_back(evaluate(c.mlp, w.subspan(h * n, n), in)[0]);
  return out;
}

ParamVector polyak_update(const ParamVector& target, const ParamVector& online, double rho) {
  require(target.size() == online.size(), "polyak_update: size mismatch");
  require(rho >= 0.0 && rho <= 1.0, "polyak_update: rho must lie in [0, 1]");
  ParamVector out = target;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = rho * target[i] + (1.0 - rho) * online[i];
  return out;
}

namespace {

constexpr std::array<char, 8> kMagic{'S', 'T', 'A', 'C', 'P', 'A', 'R', 'M'};
constexpr std::uint32_t kVersion = 1;

template <class U>
void put_le(std::ostream& os, U v) {
  std::array<char, sizeof(U)> b{};
  for (std::size_t i = 0; i < sizeof(U); ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b.data(), b.size());
}

template <class U>
U get_le(std::istream& is) {
  std::array<unsigned char, sizeof(U)> b{};
  is.read(reinterpret_cast<char*>(b.data()), b.size());
  if (!is) throw std::runtime_error("load_snapshot: truncated file");
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(b[i]) << (8 * i);
  return v;
}

void put_string(std::ostream& os, const std::string& s) {
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& is) {
  const auto n = get_le<std::uint32_t>(is);
  if (n > (1u << 20)) throw std::runtime_error("load_snapshot: implausible name length");
  std::string s(n, '\0');
  is.read(s.data(), n);
  if (!is) throw std::runtime_error("load_snapshot: truncated file");
  return s;
}

}  // namespace

void save_snapshot(const std::string& path,
                   const std::vector<std::pair<std::string, ParamVector>>& entries) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("save_snapshot: cannot open " + path);
  os.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(os, kVersion);
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(entries.size()));
  for (const auto& [name, pv] : entries) {
    put_string(os, name);
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(pv.layout().size()));
    for (const auto& seg : pv.layout()) {
      put_string(os, seg.name);
      put_le<std::uint64_t>(os, seg.offset);
      put_le<std::uint64_t>(os, seg.size);
    }
    put_le<std::uint64_t>(os, pv.size());
  }
  for (const auto& entry : entries)
    for (double x : entry.second.values()) put_le<std::uint64_t>(os, std::bit_cast<std::uint64_t>(x));
  if (!os) throw std::runtime_error("save_snapshot: write failed for " + path);
}

std::vector<std::pair<std::string, ParamVector>> load_snapshot(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_snapshot: cannot open " + path);
  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kMagic) throw std::runtime_error("load_snapshot: bad magic in " + path);
  const auto version = get_le<std::uint32_t>(is);
  if (version != kVersion)
    throw std::runtime_error("load_snapshot: unsupported version " + std::to_string(version));
  const auto n = get_le<std::uint32_t>(is);
  struct Header {
    std::string name;
    std::vector<diff::Segment> layout;
    std::uint64_t size;
  };
  std::vector<Header> headers(n);
  for (auto& h : headers) {
    h.name = get_string(is);
    const auto nseg = get_le<std::uint32_t>(is);
    for (std::uint32_t k = 0; k < nseg; ++k) {
      diff::Segment seg;
      seg.name = get_string(is);
      seg.offset = get_le<std::uint64_t>(is);
      seg.size = get_le<std::uint64_t>(is);
      h.layout.push_back(std::move(seg));
    }
    h.size = get_le<std::uint64_t>(is);
  }
  std::vector<std::pair<std::string, ParamVector>> out;
  for (auto& h : headers) {
    std::vector<double> data(h.size);
    for (double& x : data) x = std::bit_cast<double>(get_le<std::uint64_t>(is));
    out.emplace_back(h.name, h.layout.empty() ? ParamVector(std::move(data))
                                              : ParamVector(std::move(data), std::move(h.layout)));
  }
  return out;
}

}  // namespace stac::nets
