#pragma once

// Tabular softmax policies and critics on FiniteMDPs, with exact critic
// losses for enumeration and finite-difference oracles.

#include <cmath>
#include <functional>
#include <vector>

#include "stac/env/env.hpp"
#include "stac/rl/estimators.hpp"

namespace oracle {

using stac::diff::Tape;
using stac::diff::Var;
using stac::env::FiniteMDP;

inline std::size_t idx(const FiniteMDP& m, int s, int a) {
  return static_cast<std::size_t>(s * m.n_actions + a);
}

inline stac::env::TabularPolicy softmax_policy(const FiniteMDP& m, const std::vector<double>& th) {
  stac::env::TabularPolicy pi(th.size());
  for (int s = 0; s < m.n_states; ++s) {
    double mx = -1e300, z = 0.0;
    for (int a = 0; a < m.n_actions; ++a) mx = std::max(mx, th[idx(m, s, a)]);
    for (int a = 0; a < m.n_actions; ++a) z += std::exp(th[idx(m, s, a)] - mx);
    for (int a = 0; a < m.n_actions; ++a) pi[idx(m, s, a)] = std::exp(th[idx(m, s, a)] - mx) / z;
  }
  return pi;
}

inline stac::rl::PolicyModel softmax_model(const FiniteMDP& m) {
  return {static_cast<std::size_t>(m.n_states * m.n_actions),
          [m](Tape& t, std::span<const Var> th, const stac::env::Transition& tr) {
            const int s = static_cast<int>(tr.s[0]);
            const int a = static_cast<int>(tr.a[0]);
            double mx = -1e300;
            for (int b = 0; b < m.n_actions; ++b) mx = std::max(mx, th[idx(m, s, b)].value());
            std::vector<Var> ex;
            for (int b = 0; b < m.n_actions; ++b) ex.push_back(t.exp(t.add_const(th[idx(m, s, b)], -mx)));
            Var lse = t.add_const(t.log(t.sum(ex)), mx);
            return t.sub(th[idx(m, s, a)], lse);
          }};
}

inline stac::rl::CriticModel tabular_q(const FiniteMDP& m) {
  return {static_cast<std::size_t>(m.n_states * m.n_actions),
          [m](Tape&, std::span<const Var> w, const stac::env::Transition& tr) {
            return w[idx(m, static_cast<int>(tr.s[0]), static_cast<int>(tr.a[0]))];
          }};
}

inline stac::rl::CriticModel tabular_v(const FiniteMDP& m) {
  return {static_cast<std::size_t>(m.n_states),
          [](Tape&, std::span<const Var> w, const stac::env::Transition& tr) {
            return w[static_cast<std::size_t>(tr.s[0])];
          }};
}

inline stac::env::Trajectory to_trajectory(const stac::env::FiniteTrajectory& f) {
  stac::env::Trajectory tau;
  for (std::size_t k = 0; k < f.actions.size(); ++k) {
    stac::env::Transition tr;
    tr.s = {static_cast<double>(f.states[k])};
    tr.a = {static_cast<double>(f.actions[k])};
    tr.r = f.rewards[k];
    const bool last = k + 1 == f.actions.size();
    tr.s2 = {last ? -1.0 : static_cast<double>(f.states[k + 1])};
    tr.done = last;
    tau.steps.push_back(tr);
  }
  return tau;
}

/// Q^pi_t(s_t, a_t) along a trajectory.
inline std::vector<double> exact_q_along(const FiniteMDP& m, const stac::env::ExactValues& ev,
                                         const stac::env::FiniteTrajectory& f) {
  std::vector<double> q;
  for (std::size_t k = 0; k < f.actions.size(); ++k)
    q.push_back(ev.q[k][idx(m, f.states[k], f.actions[k])]);
  return q;
}

/// E_{s0~rho, a0~pi} (Q_w(s0,a0) - Q^pi_0(s0,a0))^2
inline double exact_L_q(const FiniteMDP& m, const std::vector<double>& th,
                        const std::vector<double>& w) {
  const auto pi = softmax_policy(m, th);
  const auto ev = stac::env::exact_values(m, pi);
  double l = 0.0;
  for (int s = 0; s < m.n_states; ++s)
    for (int a = 0; a < m.n_actions; ++a) {
      const double e = w[idx(m, s, a)] - ev.q[0][idx(m, s, a)];
      l += m.rho[static_cast<std::size_t>(s)] * pi[idx(m, s, a)] * e * e;
    }
  return l;
}

/// E_{s0~rho} (V_w(s0) - V^pi_0(s0))^2
inline double exact_L_v(const FiniteMDP& m, const std::vector<double>& th,
                        const std::vector<double>& w) {
  const auto ev = stac::env::exact_values(m, softmax_policy(m, th));
  double l = 0.0;
  for (int s = 0; s < m.n_states; ++s) {
    const double e = w[static_cast<std::size_t>(s)] - ev.v[0][static_cast<std::size_t>(s)];
    l += m.rho[static_cast<std::size_t>(s)] * e * e;
  }
  return l;
}

/// E_{s0~rho} V^pi_0(s0)
inline double exact_J(const FiniteMDP& m, const std::vector<double>& th) {
  const auto ev = stac::env::exact_values(m, softmax_policy(m, th));
  double j = 0.0;
  for (int s = 0; s < m.n_states; ++s)
    j += m.rho[static_cast<std::size_t>(s)] * ev.v[0][static_cast<std::size_t>(s)];
  return j;
}

inline std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& f,
                                       std::vector<double> x, double h = 1e-5) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double x0 = x[i];
    x[i] = x0 + h;
    const double fp = f(x);
    x[i] = x0 - h;
    const double fm = f(x);
    x[i] = x0;
    g[i] = (fp - fm) / (2 * h);
  }
  return g;
}

enum class Form { Q, V };

/// Sum over enumerated trajectories of P(tau) * estimator(tau), with exact
/// time-indexed targets (or the trajectory's own returns when `mc`).
inline std::vector<double> expected_estimate(const FiniteMDP& m, Form form,
                                             const std::vector<double>& th,
                                             const std::vector<double>& w, bool mc = false) {
  const auto pi = softmax_policy(m, th);
  const auto ev = stac::env::exact_values(m, pi);
  const auto pm = softmax_model(m);
  std::vector<double> out(th.size(), 0.0);
  for (const auto& f : stac::env::enumerate_trajectories(m, pi)) {
    std::vector<stac::env::Trajectory> batch{to_trajectory(f)};
    stac::rl::StepValues targets;
    if (!mc) targets.push_back(exact_q_along(m, ev, f));
    stac::rl::GradEstimate g;
    if (form == Form::Q) {
      g = stac::rl::thm1_grad_theta_L(batch, pm, th, tabular_q(m), w, m.gamma, targets);
    } else {
      std::vector<double> start;
      if (!mc) start.push_back(ev.v[0][static_cast<std::size_t>(f.states[0])]);
      g = stac::rl::prop1_grad_theta_L(batch, pm, th, tabular_v(m), w, m.gamma, targets, start);
    }
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += f.probability * g.direction[i];
  }
  return out;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

}  // namespace oracle
