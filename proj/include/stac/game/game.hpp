#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "stac/diff/derivatives.hpp"
#include "stac/diff/param_vector.hpp"

namespace stac::game {

enum class Sense { Min, Max };
enum class Player { First, Second };
enum class Rule { Individual, Stackelberg };

/// Two scalar objectives over (x1, x2), each minimised or maximised by its
/// owner. Objectives may be sums of terms (see diff::Objective).
struct TwoPlayerGame {
  diff::Objective f1;
  diff::Objective f2;
  Sense sense1 = Sense::Min;
  Sense sense2 = Sense::Min;
  std::size_t d1 = 0;
  std::size_t d2 = 0;

  static TwoPlayerGame from(diff::PairFn f1, Sense s1, diff::PairFn f2, Sense s2,
                            std::size_t d1, std::size_t d2);
};

struct LeaderConfig {
  Player leader = Player::First;
  double lambda = 0.0;
  int cg_iters = 10;
  double cg_tol = 1e-10;
  int unroll_m = 1;

  void validate() const;
};

struct JointPoint {
  diff::ParamVector x1;
  diff::ParamVector x2;
};

struct Diagnostics {
  double leader_grad_norm = 0.0;    // individual leader gradient
  double follower_grad_norm = 0.0;
  double correction_norm = 0.0;
  double cg_residual = 0.0;
  int cg_iterations = 0;
  bool fallback = false;
};

/// Gradients of each player's own objective, in that objective's declared
/// sense: a max player's entry is an ascent direction, a min player's a
/// descent direction.
struct GradientPair {
  diff::ParamVector g1;
  diff::ParamVector g2;
  Diagnostics diag;
};

GradientPair individual_gradient(const TwoPlayerGame& g, const JointPoint& x);

/// Leader entry is the (regularised) total derivative of its objective; the
/// follower entry is its individual gradient. On CG breakdown the leader
/// entry falls back to the individual gradient and diag.fallback is set.
GradientPair stackelberg_gradient(const TwoPlayerGame& g, const JointPoint& x,
                                  const LeaderConfig& cfg);

/// Motion of each player under gradient play: +grad for max, -grad for min.
std::vector<double> motion(Sense s, const diff::ParamVector& grad);

class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(int step, const std::string& what);
  int step() const { return step_; }

 private:
  int step_;
};

/// Trajectory of steps + 1 points starting at x0. Under the Stackelberg rule
/// the follower takes cfg.unroll_m steps against the old leader iterate.
std::vector<JointPoint> integrate(const TwoPlayerGame& g, const JointPoint& x0, Rule rule,
                                  const LeaderConfig& cfg, double alpha1, double alpha2,
                                  int steps);

struct Grid {
  double lo1 = -1.0, hi1 = 1.0;
  double lo2 = -1.0, hi2 = 1.0;
  int n1 = 21, n2 = 21;
};

struct FieldRow {
  double x1 = 0.0, x2 = 0.0;
  double dx1 = 0.0, dx2 = 0.0;
  bool fallback = false;
};

/// One row per node, x1 outer. Directions are motions (see `motion`).
std::vector<FieldRow> sample_vector_field(const TwoPlayerGame& g, Rule rule,
                                          const LeaderConfig& cfg, const Grid& grid);

enum class Verdict { DSE, StationaryDegenerate, NonStationary };
const char* verdict_name(Verdict v);

struct DseReport {
  Verdict verdict = Verdict::NonStationary;
  std::string failed_condition;  // empty for DSE
  double leader_total_grad_norm = 0.0;
  double follower_grad_norm = 0.0;
  std::vector<double> follower_hessian_eigenvalues;
  std::vector<double> leader_hessian_raw_real;  // eigenvalues of the raw Jacobian
  std::vector<double> leader_hessian_raw_imag;
  std::vector<double> leader_hessian_sym;       // eigenvalues of (A + A^T) / 2
};

/// Checks the differential Stackelberg equilibrium conditions with `leader`
/// leading. The leader's second-order term is the Jacobian of the total
/// derivative along the follower's implicit best response, by central
/// differences with step fd_step.
DseReport check_dse(const TwoPlayerGame& g, const JointPoint& x, double tol,
                    Player leader = Player::First, double fd_step = 1e-5);

}  // namespace stac::game
