#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "stac/cli/ini.hpp"
#include "stac/examples/examples.hpp"
#include "stac/game/game.hpp"
#include "stac/rl/config.hpp"
#include "stac/rl/train.hpp"

namespace stac::cli {

enum class JobKind { Train, VectorField, Trajectory, DseCheck };
JobKind parse_job_kind(const std::string& s);
const char* job_kind_name(JobKind k);

inline constexpr const char* kVectorFieldHeader = "x1,x2,dx1,dx2,fallback";
inline constexpr const char* kTrajectoryHeader = "k,x1,x2,err";
inline constexpr const char* kTrainingHeader =
    "step,eval_return_mean,eval_return_std,leader_grad_norm,follower_grad_norm,"
    "correction_norm,cg_residual,fallback,wall_seconds";
inline constexpr const char* kDseHeader =
    "x1,x2,verdict,failed_condition,leader_total_grad_norm,follower_grad_norm,"
    "follower_hessian_min,leader_hessian_sym_min";

/// One setting of the update rule. `algo.stackelberg` doubles as the rule of
/// game jobs; `algo.leader` Actor means the first player leads.
struct Arm {
  std::string name;
  rl::AlgoConfig algo;
  double alpha1 = 0.05;
  double alpha2 = 0.05;

  game::Rule rule() const;
  game::LeaderConfig leader_config() const;
};

struct GameSetup {
  std::string name = "motivating";  // motivating | entropic
  examples::EntropicGame entropic;
  double x1 = 0.5, x2 = 0.5;
  double c1 = 0.0, c2 = 0.0;  // equilibrium used for err
  int steps = 2000;
  game::Grid grid;
  double tol = 1e-8;  // dse-check
  double fd_step = 1e-5;
};

struct ExperimentConfig {
  JobKind kind = JobKind::Train;
  std::string name = "experiment";
  std::vector<std::uint64_t> seeds{0};
  std::string output = "results";
  std::size_t workers = 0;  // 0: one per hardware thread

  std::string env;  // train
  std::size_t total_steps = 100'000;

  GameSetup game;
  std::vector<Arm> arms;

  std::string source;  // config text, hashed into the manifest
};

/// Throws ConfigParseError naming the line and field.
ExperimentConfig parse_experiment(const std::vector<IniSection>& sections);
ExperimentConfig load_experiment(const std::string& path);

std::uint64_t fnv1a64(std::string_view bytes);

/// %.17g
std::string format_double(double x);

/// `output` resolved against STAC_OUTPUT_ROOT when that is set and `output`
/// is relative.
std::string resolve_output_dir(const std::string& output);

struct Artifact {
  std::string arm;
  std::uint64_t seed = 0;
  std::string path;
  std::string checkpoint;
  bool ok = true;
  std::string error;
};

struct RunOutcome {
  std::string output_dir;
  std::string manifest;
  std::vector<Artifact> artifacts;
  bool aborted() const;
};

game::TwoPlayerGame make_game(const GameSetup& g, std::uint64_t seed);

/// One CSV per (arm, seed) under the output directory, then manifest.json.
/// Seeds run in parallel worker slots.
RunOutcome run_experiment(const ExperimentConfig& cfg, const std::string& config_path = "");

struct RunCurve {
  std::string path;
  std::string arm;
  std::vector<rl::RunRecord> rows;
};

class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Arm name: file stem with a trailing `_seed<N>` removed.
std::string arm_of(const std::string& path);
RunCurve read_run_csv(const std::string& path);

struct ArmSummary {
  std::string arm;
  std::size_t runs = 0;
  double final_mean = 0.0;  // across runs, of each run's last eval_return_mean
  double final_std = 0.0;   // population
  std::vector<double> steps_to_threshold;  // per run; infinity if never reached
  double median_steps = 0.0;
  double fallback_rate = 0.0;  // fraction of rows flagged
};

double default_threshold(const std::string& env);
/// First eval step with mean return >= threshold, infinity otherwise.
double steps_to_threshold(const RunCurve& run, double threshold);
/// Arms in order of first appearance.
std::vector<ArmSummary> compare_runs(const std::vector<RunCurve>& runs, double threshold);
std::string format_summary(const std::vector<ArmSummary>& arms, double threshold);

}  // namespace stac::cli
