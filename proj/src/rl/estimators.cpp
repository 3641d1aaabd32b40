#include "stac/rl/estimators.hpp"

#include <cmath>
#include <stdexcept>

namespace stac::rl {

namespace {

void require_batch(const std::vector<Trajectory>& batch, const char* who) {
  if (batch.empty()) throw std::invalid_argument(std::string(who) + ": empty batch");
  for (const auto& tau : batch)
    if (tau.steps.empty()) throw std::invalid_argument(std::string(who) + ": empty trajectory");
}

void check_shape(const StepValues& v, const std::vector<Trajectory>& batch, const char* who) {
  if (v.size() != batch.size()) throw std::invalid_argument(std::string(who) + ": shape mismatch");
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i].size() != batch[i].size())
      throw std::invalid_argument(std::string(who) + ": shape mismatch");
}

StepValues default_targets(const std::vector<Trajectory>& batch, double gamma,
                           StepValues targets, const char* who) {
  if (targets.empty()) {
    for (const auto& tau : batch) targets.push_back(mc_returns(tau, gamma));
  }
  check_shape(targets, batch, who);
  return targets;
}

// log pi - stop_gradient(log pi): value 0, gradient grad log pi.
Var score(Tape& t, const PolicyModel& pi, std::span<const Var> theta, const Transition& tr) {
  Var lp = pi.log_prob(t, theta, tr);
  return t.sub(lp, t.stop_gradient(lp));
}

}  // namespace

PolicyModel policy_model(const nets::Policy& p) {
  return {p.n_params(), [p](Tape& t, std::span<const Var> th, const Transition& tr) {
            return nets::log_prob(t, p, th, tr.s, tr.a, tr.u);
          }};
}

CriticModel value_model(const nets::Critic& c) {
  return {c.n_params(), [c](Tape& t, std::span<const Var> w, const Transition& tr) {
            return nets::value(t, c, w, tr.s);
          }};
}

CriticModel q_model(const nets::Critic& c) {
  return {c.n_params(), [c](Tape& t, std::span<const Var> w, const Transition& tr) {
            return nets::q_values(t, c, w, tr.s, std::span<const double>(tr.a))[0];
          }};
}

std::vector<double> mc_returns(const Trajectory& tau, double gamma, double bootstrap) {
  if (tau.steps.empty()) throw std::invalid_argument("mc_returns: empty trajectory");
  std::vector<double> g(tau.size());
  double acc = tau.terminated() ? 0.0 : bootstrap;
  for (std::size_t k = tau.size(); k-- > 0;) {
    acc = tau.steps[k].r + gamma * acc;
    g[k] = acc;
  }
  return g;
}

std::vector<double> gae_advantages(const Trajectory& tau, std::span<const double> values,
                                   double bootstrap, double gamma, double gae_lambda) {
  if (values.size() != tau.size()) throw std::invalid_argument("gae_advantages: need one value per step");
  std::vector<double> adv(tau.size());
  double next_v = tau.terminated() ? 0.0 : bootstrap;
  double acc = 0.0;
  for (std::size_t k = tau.size(); k-- > 0;) {
    const double delta = tau.steps[k].r + gamma * next_v - values[k];
    acc = delta + gamma * gae_lambda * acc;
    adv[k] = acc;
    next_v = values[k];
  }
  return adv;
}

GradEstimate policy_gradient(const std::vector<Trajectory>& batch, const PolicyModel& pi,
                             std::span<const double> theta, const StepValues& weights) {
  require_batch(batch, "policy_gradient");
  check_shape(weights, batch, "policy_gradient");
  if (theta.size() != pi.dim) throw std::invalid_argument("policy_gradient: parameter size");
  std::size_t n = 0;
  for (const auto& tau : batch) n += tau.size();
  std::vector<double> grad(theta.size(), 0.0);
  Tape t;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    t.clear();
    auto th = t.variables(theta);
    std::vector<Var> terms;
    for (std::size_t k = 0; k < batch[i].size(); ++k)
      terms.push_back(t.scale(pi.log_prob(t, th, batch[i].steps[k]), weights[i][k] / n));
    t.backward(t.sum(terms));
    auto g = t.adjoints(th);
    for (std::size_t j = 0; j < g.size(); ++j) grad[j] += g[j];
  }
  GradEstimate out;
  out.direction = ParamVector(std::move(grad));
  out.batch = n;
  return out;
}

diff::Objective thm1_objective(const std::vector<Trajectory>& batch, const PolicyModel& pi,
                               const CriticModel& q, double gamma, StepValues targets) {
  require_batch(batch, "thm1");
  targets = default_targets(batch, gamma, std::move(targets), "thm1");
  const double n = static_cast<double>(batch.size());
  diff::Objective obj;
  obj.terms = batch.size();
  obj.chunk = 16;
  obj.build = [batch, pi, q, gamma, targets = std::move(targets), n](
                  Tape& t, std::span<const Var> theta, std::span<const Var> w, std::size_t b,
                  std::size_t e) {
    std::vector<Var> terms;
    for (std::size_t i = b; i < e; ++i) {
      const auto& tau = batch[i];
      const auto& g = targets[i];
      Var q0 = q.eval(t, w, tau.steps[0]);
      Var err = t.add_const(q0, -g[0]);
      terms.push_back(t.mul(score(t, pi, theta, tau.steps[0]), t.square(err)));
      double disc = 1.0;
      for (std::size_t k = 1; k < tau.size(); ++k) {
        disc *= gamma;
        Var c = t.scale(t.neg(err), 2.0 * disc * g[k]);
        terms.push_back(t.mul(score(t, pi, theta, tau.steps[k]), c));
      }
    }
    return t.scale(t.sum(terms), 1.0 / n);
  };
  return obj;
}

diff::Objective prop1_objective(const std::vector<Trajectory>& batch, const PolicyModel& pi,
                                const CriticModel& v, double gamma, StepValues targets,
                                std::vector<double> start_values) {
  require_batch(batch, "prop1");
  targets = default_targets(batch, gamma, std::move(targets), "prop1");
  if (start_values.empty())
    for (const auto& g : targets) start_values.push_back(g[0]);
  if (start_values.size() != batch.size()) throw std::invalid_argument("prop1: start_values size");
  const double n = static_cast<double>(batch.size());
  diff::Objective obj;
  obj.terms = batch.size();
  obj.chunk = 16;
  obj.build = [batch, pi, v, gamma, targets = std::move(targets),
               start_values = std::move(start_values),
               n](Tape& t, std::span<const Var> theta, std::span<const Var> w, std::size_t b,
                  std::size_t e) {
    std::vector<Var> terms;
    for (std::size_t i = b; i < e; ++i) {
      const auto& tau = batch[i];
      Var gap = t.neg(t.add_const(v.eval(t, w, tau.steps[0]), -start_values[i]));
      double disc = 1.0;
      for (std::size_t k = 0; k < tau.size(); ++k) {
        terms.push_back(t.mul(score(t, pi, theta, tau.steps[k]), t.scale(gap, 2.0 * disc * targets[i][k])));
        disc *= gamma;
      }
    }
    return t.scale(t.sum(terms), 1.0 / n);
  };
  return obj;
}

namespace {

GradEstimate theta_gradient(const diff::Objective& obj, std::span<const double> theta,
                            std::span<const double> w, std::size_t n) {
  auto g = diff::block_gradients(obj, theta, w, true, false);
  GradEstimate out;
  out.direction = ParamVector(std::move(g.g1));
  out.batch = n;
  return out;
}

}  // namespace

GradEstimate thm1_grad_theta_L(const std::vector<Trajectory>& batch, const PolicyModel& pi,
                               std::span<const double> theta, const CriticModel& q,
                               std::span<const double> w, double gamma, StepValues targets) {
  return theta_gradient(thm1_objective(batch, pi, q, gamma, std::move(targets)), theta, w,
                        batch.size());
}

GradEstimate prop1_grad_theta_L(const std::vector<Trajectory>& batch, const PolicyModel& pi,
                                std::span<const double> theta, const CriticModel& v,
                                std::span<const double> w, double gamma, StepValues targets,
                                std::vector<double> start_values) {
  return theta_gradient(
      prop1_objective(batch, pi, v, gamma, std::move(targets), std::move(start_values)), theta,
      w, batch.size());
}

std::vector<double> mixed_grad_w_of_theta_L(const diff::Objective& estimator,
                                            std::span<const double> theta,
                                            std::span<const double> w,
                                            std::span<const double> q) {
  if (q.size() != theta.size()) throw std::invalid_argument("mixed_grad_w_of_theta_L: |q| != |theta|");
  return diff::mixed_vjp_transposed(estimator, theta, w, q);
}

}  // namespace stac::rl
