#include "stac/game/game.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <utility>

#include "stac/linalg/linalg.hpp"

namespace stac::game {

using diff::Block;
using diff::Objective;
using diff::ParamVector;

namespace {

double sign_of(Sense s) { return s == Sense::Max ? -1.0 : 1.0; }

/// Minimisation form of f: -f for a max player.
Objective normalized(const Objective& f, Sense s) {
  if (s == Sense::Min) return f;
  Objective out = f;
  out.build = [inner = f.build](diff::Tape& t, std::span<const diff::Var> a,
                                std::span<const diff::Var> b, std::size_t lo,
                                std::size_t hi) { return t.neg(inner(t, a, b, lo, hi)); };
  return out;
}

ParamVector like(const ParamVector& shape, std::vector<double> v) {
  return ParamVector(std::move(v), shape.layout());
}

void check_point(const TwoPlayerGame& g, const JointPoint& x) {
  if (x.x1.size() != g.d1 || x.x2.size() != g.d2)
    throw std::invalid_argument("joint point does not match game dimensions");
}

std::vector<double> own_gradient(const Objective& f, const JointPoint& x, Player who) {
  const bool first = who == Player::First;
  auto bg = diff::block_gradients(f, x.x1.values(), x.x2.values(), first, !first);
  return first ? std::move(bg.g1) : std::move(bg.g2);
}

void check_finite(const std::vector<double>& v, const char* what) {
  for (double e : v)
    if (!std::isfinite(e)) throw std::runtime_error(std::string(what) + " is not finite");
}

}  // namespace

TwoPlayerGame TwoPlayerGame::from(diff::PairFn f1, Sense s1, diff::PairFn f2, Sense s2,
                                  std::size_t d1, std::size_t d2) {
  TwoPlayerGame g;
  g.f1 = Objective::from(std::move(f1));
  g.f2 = Objective::from(std::move(f2));
  g.sense1 = s1;
  g.sense2 = s2;
  g.d1 = d1;
  g.d2 = d2;
  return g;
}

void LeaderConfig::validate() const {
  if (lambda < 0.0) throw std::invalid_argument("lambda must be nonnegative");
  if (cg_iters < 1) throw std::invalid_argument("cg_iters must be positive");
  if (cg_tol < 0.0) throw std::invalid_argument("cg_tol must be nonnegative");
  if (unroll_m < 1) throw std::invalid_argument("unroll_m must be at least 1");
}

IntegrationError::IntegrationError(int step, const std::string& what)
    : std::runtime_error("step " + std::to_string(step) + ": " + what), step_(step) {}

GradientPair individual_gradient(const TwoPlayerGame& g, const JointPoint& x) {
  check_point(g, x);
  auto g1 = own_gradient(g.f1, x, Player::First);
  auto g2 = own_gradient(g.f2, x, Player::Second);
  check_finite(g1, "player 1 gradient");
  check_finite(g2, "player 2 gradient");
  GradientPair out{like(x.x1, std::move(g1)), like(x.x2, std::move(g2)), {}};
  out.diag.leader_grad_norm = linalg::norm(out.g1.values());
  out.diag.follower_grad_norm = linalg::norm(out.g2.values());
  return out;
}

GradientPair stackelberg_gradient(const TwoPlayerGame& g, const JointPoint& x,
                                  const LeaderConfig& cfg) {
  check_point(g, x);
  cfg.validate();
  const bool first = cfg.leader == Player::First;
  const Player follower = first ? Player::Second : Player::First;
  const Objective& fl = first ? g.f1 : g.f2;
  const Objective& ff = first ? g.f2 : g.f1;
  const Sense sl = first ? g.sense1 : g.sense2;
  const Sense sf = first ? g.sense2 : g.sense1;
  const Objective leader_obj = normalized(fl, sl);
  const Objective follower_obj = normalized(ff, sf);

  auto lg = diff::block_gradients(leader_obj, x.x1.values(), x.x2.values());
  std::vector<double> partial = first ? std::move(lg.g1) : std::move(lg.g2);
  std::vector<double> cross = first ? std::move(lg.g2) : std::move(lg.g1);
  std::vector<double> follower_grad = own_gradient(ff, x, follower);
  check_finite(partial, "leader gradient");
  check_finite(follower_grad, "follower gradient");

  Diagnostics diag;
  diag.leader_grad_norm = linalg::norm(partial);
  diag.follower_grad_norm = linalg::norm(follower_grad);

  std::vector<double> direction = partial;
  try {
    diff::HessianOperator hess(follower_obj, x.x1.data(), x.x2.data(),
                               first ? Block::Second : Block::First);
    linalg::LinearOperator op{hess.dim(),
                              [&hess](std::span<const double> v) { return hess.apply(v); }};
    const auto sol = linalg::cg_solve(op, cross, cfg.lambda, cfg.cg_iters, cfg.cg_tol);
    diag.cg_residual = sol.residual;
    diag.cg_iterations = sol.iterations;
    if (linalg::norm_inf(sol.x) > 0.0) {
      const auto corr = hess.cross(sol.x);
      check_finite(corr, "implicit correction");
      diag.correction_norm = linalg::norm(corr);
      for (std::size_t i = 0; i < direction.size(); ++i) direction[i] -= corr[i];
    }
  } catch (const linalg::SolverBreakdown& e) {
    diag.fallback = true;
    diag.cg_residual = e.residual();
    diag.cg_iterations = e.iteration();
    direction = partial;
  }

  // Back to the leader's declared sense.
  const double s = sign_of(sl);
  for (double& d : direction) d *= s;
  GradientPair out;
  if (first) {
    out.g1 = like(x.x1, std::move(direction));
    out.g2 = like(x.x2, std::move(follower_grad));
  } else {
    out.g1 = like(x.x1, std::move(follower_grad));
    out.g2 = like(x.x2, std::move(direction));
  }
  out.diag = diag;
  return out;
}

std::vector<double> motion(Sense s, const ParamVector& grad) {
  std::vector<double> out = grad.data();
  const double m = -sign_of(s);
  for (double& v : out) v *= m;
  return out;
}

namespace {

void step_along(ParamVector& x, double alpha, const std::vector<double>& dir) {
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += alpha * dir[i];
}

}  // namespace

std::vector<JointPoint> integrate(const TwoPlayerGame& g, const JointPoint& x0, Rule rule,
                                  const LeaderConfig& cfg, double alpha1, double alpha2,
                                  int steps) {
  if (alpha1 <= 0.0 || alpha2 <= 0.0) throw std::invalid_argument("step sizes must be positive");
  if (steps < 1) throw std::invalid_argument("steps must be positive");
  cfg.validate();
  check_point(g, x0);
  std::vector<JointPoint> path;
  path.reserve(static_cast<std::size_t>(steps) + 1);
  path.push_back(x0);
  JointPoint x = x0;
  for (int k = 0; k < steps; ++k) {
    try {
      if (rule == Rule::Individual) {
        const auto gp = individual_gradient(g, x);
        step_along(x.x1, alpha1, motion(g.sense1, gp.g1));
        step_along(x.x2, alpha2, motion(g.sense2, gp.g2));
      } else {
        const bool first = cfg.leader == Player::First;
        const auto gp = stackelberg_gradient(g, x, cfg);
        JointPoint next = x;
        if (first) {
          step_along(next.x1, alpha1, motion(g.sense1, gp.g1));
          step_along(next.x2, alpha2, motion(g.sense2, gp.g2));
          for (int l = 1; l < cfg.unroll_m; ++l) {
            const JointPoint inner{x.x1, next.x2};
            const auto gf = own_gradient(g.f2, inner, Player::Second);
            step_along(next.x2, alpha2, motion(g.sense2, like(x.x2, gf)));
          }
        } else {
          step_along(next.x2, alpha2, motion(g.sense2, gp.g2));
          step_along(next.x1, alpha1, motion(g.sense1, gp.g1));
          for (int l = 1; l < cfg.unroll_m; ++l) {
            const JointPoint inner{next.x1, x.x2};
            const auto gf = own_gradient(g.f1, inner, Player::First);
            step_along(next.x1, alpha1, motion(g.sense1, like(x.x1, gf)));
          }
        }
        x = std::move(next);
      }
    } catch (const std::exception& e) {
      throw IntegrationError(k, e.what());
    }
    path.push_back(x);
  }
  return path;
}

std::vector<FieldRow> sample_vector_field(const TwoPlayerGame& g, Rule rule,
                                          const LeaderConfig& cfg, const Grid& grid) {
  if (g.d1 != 1 || g.d2 != 1) throw std::invalid_argument("vector fields need d1 = d2 = 1");
  if (grid.n1 < 1 || grid.n2 < 1) throw std::invalid_argument("grid resolution must be positive");
  auto node = [](double lo, double hi, int n, int i) {
    return n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / (n - 1);
  };
  std::vector<FieldRow> rows;
  rows.reserve(static_cast<std::size_t>(grid.n1) * static_cast<std::size_t>(grid.n2));
  for (int i = 0; i < grid.n1; ++i) {
    for (int j = 0; j < grid.n2; ++j) {
      FieldRow r;
      r.x1 = node(grid.lo1, grid.hi1, grid.n1, i);
      r.x2 = node(grid.lo2, grid.hi2, grid.n2, j);
      const JointPoint x{ParamVector({r.x1}), ParamVector({r.x2})};
      const auto gp = rule == Rule::Individual ? individual_gradient(g, x)
                                               : stackelberg_gradient(g, x, cfg);
      r.dx1 = motion(g.sense1, gp.g1)[0];
      r.dx2 = motion(g.sense2, gp.g2)[0];
      r.fallback = gp.diag.fallback;
      rows.push_back(r);
    }
  }
  return rows;
}

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::DSE:
      return "DSE";
    case Verdict::StationaryDegenerate:
      return "stationary-but-degenerate";
    case Verdict::NonStationary:
      return "non-stationary";
  }
  return "?";
}

namespace {

std::vector<double> to_std(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace

DseReport check_dse(const TwoPlayerGame& g, const JointPoint& x, double tol, Player leader,
                    double fd_step) {
  check_point(g, x);
  const bool first = leader == Player::First;
  const Objective& ff = first ? g.f2 : g.f1;
  const Sense sf = first ? g.sense2 : g.sense1;
  const Objective follower_obj = normalized(ff, sf);
  const std::size_t dl = first ? g.d1 : g.d2;
  const std::size_t df = first ? g.d2 : g.d1;
  const Block fblock = first ? Block::Second : Block::First;

  DseReport rep;
  const auto fgrad = own_gradient(follower_obj, x, first ? Player::Second : Player::First);
  rep.follower_grad_norm = linalg::norm(fgrad);

  // Follower Hessian, assembled column by column from HVPs.
  Eigen::MatrixXd h22(df, df);
  diff::HessianOperator hess(follower_obj, x.x1.data(), x.x2.data(), fblock);
  for (std::size_t j = 0; j < df; ++j) {
    std::vector<double> e(df, 0.0);
    e[j] = 1.0;
    const auto col = hess.apply(e);
    for (std::size_t i = 0; i < df; ++i) h22(i, j) = col[i];
  }
  h22 = 0.5 * (h22 + h22.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> fes(h22);
  rep.follower_hessian_eigenvalues = to_std(fes.eigenvalues());
  const double follower_min = df == 0 ? 0.0 : fes.eigenvalues().minCoeff();

  if (rep.follower_grad_norm > tol) {
    rep.verdict = Verdict::NonStationary;
    rep.failed_condition = "follower gradient is nonzero";
    return rep;
  }

  LeaderConfig cfg;
  cfg.leader = leader;
  cfg.lambda = 0.0;
  cfg.cg_iters = static_cast<int>(std::max<std::size_t>(df, 1)) + 5;
  cfg.cg_tol = 1e-14;
  auto leader_total = [&](const JointPoint& p) {
    const auto gp = stackelberg_gradient(g, p, cfg);
    const ParamVector& d = first ? gp.g1 : gp.g2;
    std::vector<double> v = d.data();
    const double s = sign_of(first ? g.sense1 : g.sense2);
    for (double& e : v) e *= s;  // minimisation form
    return std::make_pair(v, gp.diag.fallback);
  };

  if (follower_min <= tol) {
    // The implicit map is undefined; first-order leader stationarity can still
    // be read off the direction the solver produces.
    const auto [lt, fb] = leader_total(x);
    rep.leader_total_grad_norm = linalg::norm(lt);
    if (rep.leader_total_grad_norm > tol && !fb) {
      rep.verdict = Verdict::NonStationary;
      rep.failed_condition = "leader total derivative is nonzero";
      return rep;
    }
    rep.verdict = Verdict::StationaryDegenerate;
    rep.failed_condition = "follower Hessian is not positive definite";
    return rep;
  }

  const auto [lt, fb] = leader_total(x);
  rep.leader_total_grad_norm = linalg::norm(lt);
  if (rep.leader_total_grad_norm > tol) {
    rep.verdict = Verdict::NonStationary;
    rep.failed_condition = "leader total derivative is nonzero";
    return rep;
  }

  // Implicit response dx_f/dx_l = -H22^{-1} H21, with H21 rows from mixed products.
  Eigen::MatrixXd h21(df, dl);
  for (std::size_t j = 0; j < df; ++j) {
    std::vector<double> e(df, 0.0);
    e[j] = 1.0;
    const auto row = first ? diff::mixed_vjp(follower_obj, x.x1.values(), x.x2.values(), e)
                           : diff::mixed_vjp_transposed(follower_obj, x.x1.values(),
                                                        x.x2.values(), e);
    for (std::size_t i = 0; i < dl; ++i) h21(j, i) = row[i];
  }
  const Eigen::MatrixXd response = -h22.ldlt().solve(h21);

  Eigen::MatrixXd jac(dl, dl);
  for (std::size_t i = 0; i < dl; ++i) {
    JointPoint plus = x, minus = x;
    ParamVector& lp = first ? plus.x1 : plus.x2;
    ParamVector& lm = first ? minus.x1 : minus.x2;
    ParamVector& fp = first ? plus.x2 : plus.x1;
    ParamVector& fm = first ? minus.x2 : minus.x1;
    lp[i] += fd_step;
    lm[i] -= fd_step;
    for (std::size_t j = 0; j < df; ++j) {
      fp[j] += fd_step * response(j, i);
      fm[j] -= fd_step * response(j, i);
    }
    const auto gp = leader_total(plus).first;
    const auto gm = leader_total(minus).first;
    for (std::size_t r = 0; r < dl; ++r) jac(r, i) = (gp[r] - gm[r]) / (2 * fd_step);
  }
  Eigen::EigenSolver<Eigen::MatrixXd> raw(jac, false);
  rep.leader_hessian_raw_real = to_std(raw.eigenvalues().real());
  rep.leader_hessian_raw_imag = to_std(raw.eigenvalues().imag());
  const Eigen::MatrixXd sym = 0.5 * (jac + jac.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ses(sym);
  rep.leader_hessian_sym = to_std(ses.eigenvalues());
  if (dl > 0 && ses.eigenvalues().minCoeff() <= tol) {
    rep.verdict = Verdict::StationaryDegenerate;
    rep.failed_condition = "leader total Hessian is not positive definite";
    return rep;
  }
  rep.verdict = Verdict::DSE;
  return rep;
}

}  // namespace stac::game
