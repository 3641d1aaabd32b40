#include "stac/rl/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>

#include "stac/game/game.hpp"
#include "stac/linalg/linalg.hpp"
#include "stac/rl/objectives.hpp"
#include "stac/rl/replay.hpp"

namespace stac::rl {

TrainingAborted::TrainingAborted(std::size_t step, const std::string& why,
                                 std::vector<RunRecord> records)
    : std::runtime_error("training aborted at step " + std::to_string(step) + ": " + why),
      step_(step),
      records_(std::move(records)) {}

namespace {

double box_scale(const env::ActionSpace& as) {
  if (as.discrete) throw ConfigError("continuous action space required");
  const double h = as.high.at(0);
  for (std::size_t i = 0; i < as.low.size(); ++i)
    if (as.high[i] != h || as.low[i] != -h)
      throw ConfigError("action box must be symmetric with equal bounds");
  return h;
}

struct Adam {
  std::vector<double> m, v;
  long t = 0;

  void step(std::span<double> x, std::span<const double> motion, double lr) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    if (m.empty()) {
      m.assign(x.size(), 0.0);
      v.assign(x.size(), 0.0);
    }
    ++t;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
    for (std::size_t i = 0; i < x.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * motion[i];
      v[i] = b2 * v[i] + (1.0 - b2) * motion[i] * motion[i];
      x[i] += lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
    }
  }
};

void check_finite(const ParamVector& p, const char* what) {
  for (double x : p.values())
    if (!std::isfinite(x)) throw std::runtime_error(std::string("non-finite ") + what);
}

game::LeaderConfig leader_config(const AlgoConfig& cfg) {
  game::LeaderConfig lc;
  lc.leader = cfg.leader == LeaderRole::Actor ? game::Player::First : game::Player::Second;
  lc.lambda = cfg.lambda;
  lc.cg_iters = cfg.cg_iters;
  lc.cg_tol = cfg.cg_tol;
  lc.unroll_m = cfg.unroll_m;
  return lc;
}

class Trainer {
 public:
  Trainer(const env::Env& proto, const AlgoConfig& cfg, std::size_t total, const TrainHooks& hooks)
      : cfg_(cfg),
        total_(total),
        hooks_(hooks),
        env_(proto.clone()),
        eval_env_(proto.clone()),
        policy_(make_policy(proto.spec(), cfg)),
        critic_(make_critic(proto.spec(), cfg)),
        act_rng_(stream_seed(cfg.seed, 1)),
        update_rng_(stream_seed(cfg.seed, 2)),
        start_(std::chrono::steady_clock::now()) {
    cfg_.validate();
    if (cfg.algo == Algo::DDPG || cfg.algo == Algo::SAC) box_scale(proto.spec().action_space);
    env_->seed(cfg.seed);
    eval_env_->seed(stream_seed(cfg.seed, 4));
    nets::Rng init(cfg.seed);
    res_.actor = policy_.init(init);
    res_.critic = critic_.init(init);
    target_ = res_.critic;
  }

  TrainResult run() {
    try {
      if (cfg_.algo == Algo::AC)
        run_on_policy();
      else
        run_off_policy();
    } catch (const Stop&) {
    } catch (const std::runtime_error& e) {
      checkpoint();
      throw TrainingAborted(step_, e.what(), res_.records);
    }
    checkpoint();
    return std::move(res_);
  }

 private:
  struct Stop {};

  void checkpoint() {
    if (hooks_.checkpoint_path.empty()) return;
    nets::save_snapshot(hooks_.checkpoint_path,
                        {{"actor", res_.actor}, {"critic", res_.critic}, {"critic_target", target_}});
  }

  void after_step() {
    if (step_ % cfg_.eval_every == 0) record();
    if (cfg_.checkpoint_every > 0 && step_ % cfg_.checkpoint_every == 0) checkpoint();
  }

  void record() {
    RunRecord r;
    r.step = step_;
    auto [mean, sd] = evaluate_policy(*eval_env_, cfg_, res_.actor, cfg_.eval_episodes);
    r.eval_return_mean = mean;
    r.eval_return_std = sd;
    r.leader_grad_norm = last_.leader_grad_norm;
    r.follower_grad_norm = last_.follower_grad_norm;
    r.correction_norm = last_.correction_norm;
    r.cg_residual = last_.cg_residual;
    r.fallback = fallback_since_record_ ? 1 : 0;
    fallback_since_record_ = false;
    if (cfg_.wall_clock)
      r.wall_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    res_.records.push_back(r);
    if (hooks_.on_record) hooks_.on_record(r);
  }

  // Leader/follower gradients at the current point, then one step each.
  // Returns the pair so that unrolled follower steps can follow.
  game::GradientPair joint_gradient(const ActorCritic& ac) {
    game::JointPoint x{res_.actor, res_.critic};
    game::GradientPair gp;
    if (cfg_.stackelberg) {
      gp = game::stackelberg_gradient(ac.game(), x, leader_config(cfg_));
      ++res_.stackelberg_updates;
      if (gp.diag.fallback) {
        ++res_.fallback_updates;
        fallback_since_record_ = true;
      }
    } else {
      gp = game::individual_gradient(ac.game(), x);
    }
    last_ = gp.diag;
    return gp;
  }

  void finish_update() {
    check_finite(res_.actor, "actor parameters");
    check_finite(res_.critic, "critic parameters");
    ++res_.updates;
    if (hooks_.on_update) hooks_.on_update(res_.updates, res_.actor, res_.critic);
    if (hooks_.max_updates > 0 && res_.updates >= hooks_.max_updates) throw Stop{};
  }

  // ---- AC ----

  void run_on_policy() {
    std::vector<Trajectory> batch;
    Trajectory cur;
    auto obs = env_->reset();
    std::size_t in_epoch = 0;
    while (step_ < total_) {
      auto smp = nets::sample(policy_, res_.actor.values(), obs, act_rng_);
      auto sr = env_->step(smp.a);
      ++step_;
      ++in_epoch;
      Transition tr{obs, smp.a, smp.u, sr.reward, sr.obs, sr.terminal, sr.truncated};
      cur.steps.push_back(std::move(tr));
      obs = sr.obs;
      const bool cut = in_epoch == cfg_.steps_per_epoch || step_ == total_;
      if (sr.ended() || cut) {
        if (!sr.ended()) cur.steps.back().truncated = true;
        batch.push_back(std::move(cur));
        cur = Trajectory{};
        obs = env_->reset();
      }
      if (cut) {
        update_on_policy(std::move(batch));
        batch.clear();
        in_epoch = 0;
      }
      after_step();
    }
  }

  void update_on_policy(std::vector<Trajectory> trajs) {
    auto b = make_on_policy_batch(std::move(trajs), critic_, res_.critic.values(), cfg_.gamma,
                                  cfg_.gae_lambda);
    auto ac = ac_objectives(b, policy_, critic_, cfg_.gamma);
    auto gp = joint_gradient(ac);
    const ParamVector theta_k = res_.actor;
    linalg::axpy(cfg_.lr_actor, gp.g1.values(), res_.actor.values());
    linalg::axpy(-cfg_.lr_critic, gp.g2.values(), res_.critic.values());
    for (int l = 1; l < cfg_.unroll_m; ++l) {
      auto g = diff::block_gradients(ac.L, theta_k.values(), res_.critic.values(), false, true);
      linalg::axpy(-cfg_.lr_critic, g.g2, res_.critic.values());
    }
    finish_update();
  }

  // ---- DDPG / SAC ----

  void run_off_policy() {
    ReplayBuffer buffer(cfg_.replay_capacity, stream_seed(cfg_.seed, 3));
    const auto& as = env_->spec().action_space;
    const double scale = box_scale(as);
    std::uniform_real_distribution<double> uni(-scale, scale);
    std::normal_distribution<double> noise(0.0, cfg_.act_noise);
    auto obs = env_->reset();
    while (step_ < total_) {
      std::vector<double> a;
      if (step_ < cfg_.start_steps) {
        for (std::size_t i = 0; i < as.dim(); ++i) a.push_back(uni(act_rng_));
      } else if (cfg_.algo == Algo::DDPG) {
        a = nets::mean_action(policy_, res_.actor.values(), obs);
        for (double& ai : a) ai = std::clamp(ai + noise(act_rng_), -scale, scale);
      } else {
        a = nets::sample(policy_, res_.actor.values(), obs, act_rng_).a;
      }
      auto sr = env_->step(a);
      ++step_;
      buffer.add(Transition{obs, a, {}, sr.reward, sr.obs, sr.terminal, sr.truncated});
      obs = sr.ended() ? env_->reset() : sr.obs;
      if (step_ >= cfg_.update_after && step_ % cfg_.update_every == 0)
        for (std::size_t j = 0; j < cfg_.update_every; ++j) update_off_policy(buffer);
      after_step();
    }
  }

  void update_off_policy(ReplayBuffer& buffer) {
    auto batch = buffer.sample(cfg_.batch_size);
    auto ac = cfg_.algo == Algo::DDPG
                  ? ddpg_objectives(batch, policy_, critic_, target_.values(), cfg_.gamma)
                  : sac_objectives(batch, policy_, critic_, target_.values(), cfg_.eta,
                                   cfg_.gamma, update_rng_);
    auto gp = joint_gradient(ac);
    const ParamVector theta_k = res_.actor, w_k = res_.critic;
    actor_opt_.step(res_.actor.values(), game::motion(game::Sense::Max, gp.g1), cfg_.lr_actor);
    critic_opt_.step(res_.critic.values(), game::motion(game::Sense::Min, gp.g2), cfg_.lr_critic);
    const bool critic_follows = !cfg_.stackelberg || cfg_.leader == LeaderRole::Actor;
    for (int l = 1; l < cfg_.unroll_m; ++l) {
      if (critic_follows) {
        auto g = diff::block_gradients(ac.L, theta_k.values(), res_.critic.values(), false, true);
        linalg::Vec mv(g.g2.size());
        for (std::size_t i = 0; i < mv.size(); ++i) mv[i] = -g.g2[i];
        critic_opt_.step(res_.critic.values(), mv, cfg_.lr_critic);
      } else {
        auto g = diff::block_gradients(ac.J, res_.actor.values(), w_k.values(), true, false);
        actor_opt_.step(res_.actor.values(), g.g1, cfg_.lr_actor);
      }
    }
    target_ = nets::polyak_update(target_, res_.critic, cfg_.polyak);
    finish_update();
  }

  AlgoConfig cfg_;
  std::size_t total_;
  const TrainHooks& hooks_;
  std::unique_ptr<env::Env> env_;
  std::unique_ptr<env::Env> eval_env_;
  nets::Policy policy_;
  nets::Critic critic_;
  nets::Rng act_rng_;
  nets::Rng update_rng_;
  std::chrono::steady_clock::time_point start_;
  TrainResult res_;
  ParamVector target_;
  Adam actor_opt_, critic_opt_;
  game::Diagnostics last_;
  bool fallback_since_record_ = false;
  std::size_t step_ = 0;
};

}  // namespace

std::uint64_t stream_seed(std::uint64_t seed, unsigned k) {
  // splitmix64 finaliser
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (k + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

nets::Policy make_policy(const env::MDPSpec& spec, const AlgoConfig& cfg) {
  const auto& as = spec.action_space;
  switch (cfg.algo) {
    case Algo::AC:
      if (as.discrete)
        return nets::Policy::categorical(spec.state_dim, static_cast<std::size_t>(as.n),
                                         cfg.actor_hidden, cfg.activation);
      return nets::Policy::gaussian_tanh(spec.state_dim, as.dim(), box_scale(as),
                                         cfg.actor_hidden, cfg.activation);
    case Algo::DDPG:
      return nets::Policy::deterministic(spec.state_dim, as.dim(), box_scale(as),
                                         cfg.actor_hidden, cfg.activation);
    case Algo::SAC:
      return nets::Policy::gaussian_tanh(spec.state_dim, as.dim(), box_scale(as),
                                         cfg.actor_hidden, cfg.activation);
  }
  throw ConfigError("unknown algorithm");
}

nets::Critic make_critic(const env::MDPSpec& spec, const AlgoConfig& cfg) {
  switch (cfg.algo) {
    case Algo::AC: return nets::Critic::value(spec.state_dim, cfg.critic_hidden, cfg.activation);
    case Algo::DDPG:
      return nets::Critic::q(spec.state_dim, spec.action_space.dim(), cfg.critic_hidden,
                             cfg.activation);
    case Algo::SAC:
      return nets::Critic::q(spec.state_dim, spec.action_space.dim(), cfg.critic_hidden,
                             cfg.activation, true);
  }
  throw ConfigError("unknown algorithm");
}

std::pair<double, double> evaluate_policy(env::Env& e, const AlgoConfig& cfg,
                                          const diff::ParamVector& actor, std::size_t episodes) {
  const auto policy = make_policy(e.spec(), cfg);
  std::vector<double> returns;
  for (std::size_t k = 0; k < episodes; ++k) {
    auto obs = e.reset();
    double total = 0.0;
    for (;;) {
      auto sr = e.step(nets::mean_action(policy, actor.values(), obs));
      total += sr.reward;
      if (sr.ended()) break;
      obs = std::move(sr.obs);
    }
    returns.push_back(total);
  }
  double mean = 0.0;
  for (double r : returns) mean += r;
  mean /= static_cast<double>(returns.size());
  double var = 0.0;
  for (double r : returns) var += (r - mean) * (r - mean);
  return {mean, std::sqrt(var / static_cast<double>(returns.size()))};
}

TrainResult train(const env::Env& prototype, const AlgoConfig& cfg, std::size_t total_steps,
                  const TrainHooks& hooks) {
  cfg.validate();
  Trainer t(prototype, cfg, total_steps, hooks);
  return t.run();
}

}  // namespace stac::rl
