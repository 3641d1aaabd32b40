// stac: run experiment configs and compare training runs.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "stac/cli/experiment.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRuntimeAbort = 2;

int run_verb(const std::string& path) {
  stac::cli::ExperimentConfig cfg;
  try {
    cfg = stac::cli::load_experiment(path);
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << path << ": " << e.what() << '\n';
    return kConfigError;
  }
  try {
    const auto out = stac::cli::run_experiment(cfg, path);
    for (const auto& a : out.artifacts) {
      if (a.ok) std::cout << a.path << '\n';
      else std::cerr << "aborted: " << a.arm << " seed " << a.seed << ": " << a.error << '\n';
    }
    std::cout << out.manifest << '\n';
    return out.aborted() ? kRuntimeAbort : kOk;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return kRuntimeAbort;
  }
}

int compare_verb(const std::vector<std::string>& csvs, const std::string& env, double threshold,
                 bool have_threshold) {
  try {
    const double t = have_threshold ? threshold : stac::cli::default_threshold(env);
    std::vector<stac::cli::RunCurve> runs;
    for (const auto& p : csvs) runs.push_back(stac::cli::read_run_csv(p));
    std::cout << stac::cli::format_summary(stac::cli::compare_runs(runs, t), t);
    return kOk;
  } catch (const std::exception& e) {
    std::cerr << "compare: " << e.what() << '\n';
    return kConfigError;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stackelberg actor-critic experiments"};
  app.require_subcommand(1);

  std::string config;
  auto* run = app.add_subcommand("run", "Run an experiment config (output root: $STAC_OUTPUT_ROOT)");
  run->add_option("config", config, "Config file")->required();

  std::vector<std::string> csvs;
  std::string env = "cartpole";
  double threshold = 0.0;
  auto* compare = app.add_subcommand("compare", "Summarise training CSVs, grouped by arm");
  compare->add_option("csv", csvs, "Training CSVs (<arm>_seed<N>.csv)")->required();
  compare->add_option("--env", env, "Environment for the default threshold (cartpole 450, pendulum -300)");
  auto* th = compare->add_option("--threshold", threshold, "Return threshold");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }
  if (*run) return run_verb(config);
  return compare_verb(csvs, env, threshold, th->count() > 0);
}
