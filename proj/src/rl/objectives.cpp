#include "stac/rl/objectives.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

namespace stac::rl {

game::TwoPlayerGame ActorCritic::game() const {
  game::TwoPlayerGame g;
  g.f1 = J;
  g.f2 = L;
  g.sense1 = game::Sense::Max;
  g.sense2 = game::Sense::Min;
  g.d1 = d_theta;
  g.d2 = d_w;
  return g;
}

namespace {

void require_nonempty(std::size_t n, const char* who) {
  if (n == 0) throw std::invalid_argument(std::string(who) + ": empty batch");
}

Var min_of(const std::vector<Var>& q) { return q.size() == 1 ? q[0] : diff::min(q[0], q[1]); }

}  // namespace

ActorCritic ddpg_objectives(const std::vector<Transition>& batch, const nets::Policy& mu,
                            const nets::Critic& q, std::span<const double> q_target,
                            double gamma) {
  require_nonempty(batch.size(), "ddpg_objectives");
  if (mu.kind != nets::PolicyKind::Deterministic)
    throw nets::KindError("ddpg_objectives: deterministic actor required");
  if (q.kind != nets::CriticKind::Q) throw nets::KindError("ddpg_objectives: Q critic required");
  if (q_target.size() != q.n_params()) throw std::invalid_argument("ddpg_objectives: target size");
  const double n = static_cast<double>(batch.size());
  std::vector<double> q0(q_target.begin(), q_target.end());

  ActorCritic ac;
  ac.d_theta = mu.n_params();
  ac.d_w = q.n_params();
  ac.J.terms = batch.size();
  ac.J.build = [batch, mu, q, n](Tape& t, std::span<const Var> th, std::span<const Var> w,
                                 std::size_t b, std::size_t e) {
    std::vector<Var> terms;
    for (std::size_t i = b; i < e; ++i) {
      auto a = nets::rsample(t, mu, th, std::span<const double>(batch[i].s), {});
      terms.push_back(nets::q_values(t, q, w, batch[i].s, std::span<const Var>(a.a))[0]);
    }
    return t.scale(t.sum(terms), 1.0 / n);
  };
  ac.L.terms = batch.size();
  ac.L.build = [batch, mu, q, q0, gamma, n](Tape& t, std::span<const Var> th,
                                            std::span<const Var> w, std::size_t b,
                                            std::size_t e) {
    auto w0 = t.constants(q0);
    std::vector<Var> terms;
    for (std::size_t i = b; i < e; ++i) {
      const auto& tr = batch[i];
      Var y = t.constant(tr.r);
      if (!tr.done && gamma != 0.0) {
        auto a2 = nets::rsample(t, mu, th, std::span<const double>(tr.s2), {});
        Var q_next = nets::q_values(t, q, w0, tr.s2, std::span<const Var>(a2.a))[0];
        y = t.add_const(t.scale(q_next, gamma), tr.r);
      }
      Var qsa = nets::q_values(t, q, w, tr.s, std::span<const double>(tr.a))[0];
      terms.push_back(t.square(t.sub(qsa, y)));
    }
    return t.scale(t.sum(terms), 1.0 / n);
  };
  return ac;
}

ActorCritic sac_objectives(const std::vector<Transition>& batch, const nets::Policy& pi,
                           const nets::Critic& q2, std::span<const double> q_target, double eta,
                           double gamma, nets::Rng& rng) {
  require_nonempty(batch.size(), "sac_objectives");
  if (pi.kind != nets::PolicyKind::GaussianTanh)
    throw nets::KindError("sac_objectives: gaussian-tanh actor required");
  if (q2.kind == nets::CriticKind::V) throw nets::KindError("sac_objectives: Q critic required");
  if (q_target.size() != q2.n_params()) throw std::invalid_argument("sac_objectives: target size");
  const double n = static_cast<double>(batch.size());
  std::vector<double> q0(q_target.begin(), q_target.end());
  std::normal_distribution<double> normal;
  std::vector<std::vector<double>> eps_s(batch.size()), eps_s2(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    for (std::size_t k = 0; k < pi.act_dim; ++k) eps_s[i].push_back(normal(rng));
    for (std::size_t k = 0; k < pi.act_dim; ++k) eps_s2[i].push_back(normal(rng));
  }

  ActorCritic ac;
  ac.d_theta = pi.n_params();
  ac.d_w = q2.n_params();
  ac.J.terms = batch.size();
  ac.J.build = [batch, pi, q2, eta, eps_s, n](Tape& t, std::span<const Var> th,
                                              std::span<const Var> w, std::size_t b,
                                              std::size_t e) {
    std::vector<Var> terms;
    for (std::size_t i = b; i < e; ++i) {
      auto r = nets::rsample(t, pi, th, std::span<const double>(batch[i].s), eps_s[i]);
      auto qs = nets::q_values(t, q2, w, batch[i].s, std::span<const Var>(r.a));
      terms.push_back(t.sub(min_of(qs), t.scale(r.log_prob, eta)));
    }
    return t.scale(t.sum(terms), 1.0 / n);
  };
  ac.L.terms = batch.size();
  ac.L.build = [batch, pi, q2, q0, eta, gamma, eps_s2, n](Tape& t, std::span<const Var> th,
                                                          std::span<const Var> w,
                                                          std::size_t b, std::size_t e) {
    auto w0 = t.constants(q0);
    std::vector<Var> terms;
    for (std::size_t i = b; i < e; ++i) {
      const auto& tr = batch[i];
      Var y = t.constant(tr.r);
      if (!tr.done && gamma != 0.0) {
        auto r2 = nets::rsample(t, pi, th, std::span<const double>(tr.s2), eps_s2[i]);
        auto qn = nets::q_values(t, q2, w0, tr.s2, std::span<const Var>(r2.a));
        Var soft = t.sub(min_of(qn), t.scale(r2.log_prob, eta));
        y = t.add_const(t.scale(soft, gamma), tr.r);
      }
      for (Var qsa : nets::q_values(t, q2, w, tr.s, std::span<const double>(tr.a)))
        terms.push_back(t.square(t.sub(qsa, y)));
    }
    return t.scale(t.sum(terms), 1.0 / n);
  };
  return ac;
}

OnPolicyBatch make_on_policy_batch(std::vector<Trajectory> trajectories, const nets::Critic& v,
                                   std::span<const double> w, double gamma, double gae_lambda) {
  if (trajectories.empty()) throw std::invalid_argument("make_on_policy_batch: empty batch");
  OnPolicyBatch b;
  std::vector<double> flat;
  for (const auto& tau : trajectories) {
    if (tau.steps.empty()) throw std::invalid_argument("make_on_policy_batch: empty trajectory");
    std::vector<double> vals;
    for (const auto& tr : tau.steps) vals.push_back(nets::value(v, w, tr.s));
    const double boot = tau.terminated() ? 0.0 : nets::value(v, w, tau.steps.back().s2);
    b.returns.push_back(mc_returns(tau, gamma, boot));
    b.advantages.push_back(gae_advantages(tau, vals, boot, gamma, gae_lambda));
    flat.insert(flat.end(), b.advantages.back().begin(), b.advantages.back().end());
  }
  double mean = 0.0;
  for (double x : flat) mean += x;
  mean /= static_cast<double>(flat.size());
  double var = 0.0;
  for (double x : flat) var += (x - mean) * (x - mean);
  var /= static_cast<double>(flat.size());
  const double sd = std::sqrt(var);
  b.adv_scale = sd > 0.0 ? sd : 1.0;
  for (auto& a : b.advantages)
    for (double& x : a) x = (x - mean) / b.adv_scale;
  b.steps = flat.size();
  b.trajectories = std::move(trajectories);
  return b;
}

ActorCritic ac_objectives(const OnPolicyBatch& batch, const nets::Policy& pi,
                          const nets::Critic& v, double gamma) {
  if (v.kind != nets::CriticKind::V) throw nets::KindError("ac_objectives: state-value critic required");
  require_nonempty(batch.trajectories.size(), "ac_objectives");
  auto data = std::make_shared<const OnPolicyBatch>(batch);
  const double n_steps = static_cast<double>(batch.steps);
  const double n_traj = static_cast<double>(batch.trajectories.size());
  const auto pm = policy_model(pi);

  ActorCritic ac;
  ac.d_theta = pi.n_params();
  ac.d_w = v.n_params();
  ac.J.terms = batch.trajectories.size();
  ac.J.chunk = 64;
  ac.J.build = [data, pm, v, gamma, n_steps, n_traj](Tape& t, std::span<const Var> th,
                                                     std::span<const Var> w, std::size_t b,
                                                     std::size_t e) {
    std::vector<Var> terms;
    for (std::size_t i = b; i < e; ++i) {
      const auto& tau = data->trajectories[i];
      for (std::size_t k = 0; k < tau.size(); ++k) {
        Var lp = pm.log_prob(t, th, tau.steps[k]);
        terms.push_back(t.scale(t.sub(lp, t.stop_gradient(lp)), data->advantages[i][k] / n_steps));
      }
      const auto& first = tau.steps[0];
      if (!first.done)
        terms.push_back(t.scale(nets::value(t, v, w, first.s2), gamma / (n_traj * data->adv_scale)));
    }
    return t.sum(terms);
  };
  ac.L.terms = batch.trajectories.size();
  ac.L.chunk = 64;
  ac.L.build = [data, pm, v, gamma, n_steps, n_traj](Tape& t, std::span<const Var> th,
                                                     std::span<const Var> w, std::size_t b,
                                                     std::size_t e) {
    std::vector<Var> terms;
    for (std::size_t i = b; i < e; ++i) {
      const auto& tau = data->trajectories[i];
      const auto& g = data->returns[i];
      Var v0;
      for (std::size_t k = 0; k < tau.size(); ++k) {
        Var vk = nets::value(t, v, w, tau.steps[k].s);
        if (k == 0) v0 = vk;
        terms.push_back(t.scale(t.square(t.add_const(vk, -g[k])), 1.0 / n_steps));
      }
      Var gap = t.neg(t.add_const(v0, -g[0]));
      double disc = 1.0;
      for (std::size_t k = 0; k < tau.size(); ++k) {
        Var lp = pm.log_prob(t, th, tau.steps[k]);
        Var c = t.scale(gap, 2.0 * disc * g[k] / n_traj);
        terms.push_back(t.mul(t.sub(lp, t.stop_gradient(lp)), c));
        disc *= gamma;
      }
    }
    return t.sum(terms);
  };
  return ac;
}

GradEstimate total_derivative(const ActorCritic& ac, std::span<const double> theta,
                              std::span<const double> w, const AlgoConfig& cfg) {
  if (!cfg.stackelberg) throw ConfigError("total_derivative: stackelberg is off");
  game::LeaderConfig lc;
  lc.leader = cfg.leader == LeaderRole::Actor ? game::Player::First : game::Player::Second;
  lc.lambda = cfg.lambda;
  lc.cg_iters = cfg.cg_iters;
  lc.cg_tol = cfg.cg_tol;
  lc.unroll_m = cfg.unroll_m;
  game::JointPoint x{ParamVector(std::vector<double>(theta.begin(), theta.end())),
                     ParamVector(std::vector<double>(w.begin(), w.end()))};
  auto gp = game::stackelberg_gradient(ac.game(), x, lc);
  GradEstimate out;
  out.direction = lc.leader == game::Player::First ? std::move(gp.g1) : std::move(gp.g2);
  out.batch = ac.J.terms;
  out.diag = gp.diag;
  return out;
}

}  // namespace stac::rl
