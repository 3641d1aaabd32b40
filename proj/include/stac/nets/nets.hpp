#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stac/diff/param_vector.hpp"
#include "stac/diff/tape.hpp"

namespace stac::nets {

using diff::ParamVector;
using diff::Tape;
using diff::Var;
using Rng = std::mt19937_64;

enum class Activation { Tanh, Relu, Identity };
Activation parse_activation(const std::string& name);

struct MLPSpec {
  std::size_t in = 0;
  std::vector<std::size_t> widths;      // hidden and output widths, in order
  std::vector<Activation> activations;  // one per entry of widths

  /// Hidden layers share `hidden_act`; the output layer uses `out_act`.
  static MLPSpec make(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out,
                      Activation hidden_act, Activation out_act = Activation::Identity);
  std::size_t out() const { return widths.empty() ? in : widths.back(); }
  std::size_t n_params() const;
  /// Segments "l<k>.w" (row-major out x in) and "l<k>.b", prefixed.
  std::vector<diff::Segment> layout(const std::string& prefix = "") const;
  void validate() const;
};

/// Weights uniform in +-1/sqrt(fan_in), biases zero.
ParamVector init_params(const MLPSpec& spec, Rng& rng, const std::string& prefix = "");

/// Records the network on the tape. `params` and `x` should be contiguous
/// index ranges (as returned by Tape::variables / Tape::constants) for the
/// vectorised affine path; the outputs come back contiguous too.
std::vector<Var> forward(Tape& t, const MLPSpec& spec, std::span<const Var> params,
                         std::span<const Var> x);

/// Plain numeric evaluation, no tape.
std::vector<double> evaluate(const MLPSpec& spec, std::span<const double> params,
                             std::span<const double> x);

enum class PolicyKind { Categorical, GaussianTanh, Deterministic };

/// Categorical: the network emits logits. Gaussian-tanh: mean and log-sigma
/// heads, a = scale * tanh(u), u ~ N(mean, sigma). Deterministic: the network
/// ends in tanh and a = scale * output.
struct Policy {
  PolicyKind kind = PolicyKind::Categorical;
  MLPSpec mlp;
  std::size_t act_dim = 1;  // number of categories for Categorical
  double action_scale = 1.0;

  static Policy categorical(std::size_t obs_dim, std::size_t n_actions,
                            const std::vector<std::size_t>& hidden, Activation act);
  static Policy gaussian_tanh(std::size_t obs_dim, std::size_t act_dim, double scale,
                              const std::vector<std::size_t>& hidden, Activation act);
  static Policy deterministic(std::size_t obs_dim, std::size_t act_dim, double scale,
                              const std::vector<std::size_t>& hidden, Activation act);
  std::size_t n_params() const { return mlp.n_params(); }
  ParamVector init(Rng& rng) const { return init_params(mlp, rng, "pi."); }
};

constexpr double kLogStdMin = -20.0;
constexpr double kLogStdMax = 2.0;

class KindError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Differentiable log pi(a|s). Gaussian-tanh takes the stored pre-squash `u`
/// when given; otherwise u = atanh(a / scale), which throws std::domain_error
/// on the box boundary.
Var log_prob(Tape& t, const Policy& p, std::span<const Var> params, std::span<const double> s,
             std::span<const double> a, std::span<const double> u = {});

/// Log-probabilities of every category (Categorical only).
std::vector<Var> log_probs(Tape& t, const Policy& p, std::span<const Var> params,
                           std::span<const double> s);

struct Sample {
  std::vector<double> a;
  std::vector<double> u;  // Gaussian-tanh only
};

Sample sample(const Policy& p, std::span<const double> params, std::span<const double> s,
              Rng& rng);
Sample sample(const Policy& p, std::span<const double> params, std::span<const double> s,
              std::uint64_t seed);

/// Action used for evaluation: argmax, squashed mean, or mu(s).
std::vector<double> mean_action(const Policy& p, std::span<const double> params,
                                std::span<const double> s);

std::vector<double> categorical_probs(const Policy& p, std::span<const double> params,
                                      std::span<const double> s);

struct RSample {
  std::vector<Var> a;
  Var log_prob;  // unset for Deterministic
};

/// Reparameterised action a_theta(s) with noise eps (ignored when
/// deterministic); gradients flow to the parameters.
RSample rsample(Tape& t, const Policy& p, std::span<const Var> params, std::span<const double> s,
                std::span<const double> eps);
/// Same as rsample but with s already on the tape.
RSample rsample(Tape& t, const Policy& p, std::span<const Var> params, std::span<const Var> s,
                std::span<const double> eps);

enum class CriticKind { V, Q, DoubleQ };

/// V(s), Q(s, a) or two independent Q networks with w = {w1, w2}.
struct Critic {
  CriticKind kind = CriticKind::V;
  MLPSpec mlp;

  static Critic value(std::size_t obs_dim, const std::vector<std::size_t>& hidden, Activation act);
  static Critic q(std::size_t obs_dim, std::size_t act_dim, const std::vector<std::size_t>& hidden,
                  Activation act, bool twin = false);
  std::size_t heads() const { return kind == CriticKind::DoubleQ ? 2 : 1; }
  std::size_t n_params() const { return heads() * mlp.n_params(); }
  ParamVector init(Rng& rng) const;
};

Var value(Tape& t, const Critic& c, std::span<const Var> w, std::span<const double> s);
/// One Q per head. `a` may be tape nodes (for gradients through the action).
std::vector<Var> q_values(Tape& t, const Critic& c, std::span<const Var> w,
                          std::span<const double> s, std::span<const Var> a);
std::vector<Var> q_values(Tape& t, const Critic& c, std::span<const Var> w,
                          std::span<const double> s, std::span<const double> a);

double value(const Critic& c, std::span<const double> w, std::span<const double> s);
std::vector<double> q_values(const Critic& c, std::span<const double> w,
                             std::span<const double> s, std::span<const double> a);

/// rho * target + (1 - rho) * online.
ParamVector polyak_update(const ParamVector& target, const ParamVector& online, double rho);

/// Binary snapshot: "STACPARM", uint32 version, entry table (names and
/// segment tables), then little-endian float64 data.
void save_snapshot(const std::string& path,
                   const std::vector<std::pair<std::string, ParamVector>>& entries);
std::vector<std::pair<std::string, ParamVector>> load_snapshot(const std::string& path);

}  // namespace stac::nets
