#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "stac/cli/experiment.hpp"

using namespace stac;
using namespace stac::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("stac_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const fs::path& p) {
  std::vector<std::string> out;
  std::istringstream in(slurp(p));
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  f << text;
}

ExperimentConfig parse(const std::string& text, const fs::path& out) {
  auto c = parse_experiment(parse_ini(text));
  c.output = out.string();
  c.source = text;
  return c;
}

int run_tool(const std::string& args) {
  const int rc = std::system((std::string(STAC_TOOL) + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_CASE("ini parsing") {
  auto s = parse_ini("# top\n[job]\nkind = train ; trailing\n\n[arm:a]\nlambda=0.5\n");
  REQUIRE(s.size() == 2);
  CHECK(s[0].name == "job");
  CHECK(s[0].find("kind")->value == "train");
  CHECK(s[1].find("lambda")->line == 6);
  CHECK_THROWS_WITH_AS(parse_ini("[job]\nkind\n"), "line 2: expected key = value", ConfigParseError);
  CHECK_THROWS_WITH_AS(parse_ini("[job\n"), "line 1: unterminated section header", ConfigParseError);
  CHECK_THROWS_AS(parse_ini("[a]\nx=1\nx=2\n"), ConfigParseError);
  CHECK_THROWS_AS(parse_ini("[a]\n[a]\n"), ConfigParseError);
}

TEST_CASE("experiment parsing and validation") {
  auto c = parse_experiment(parse_ini(
      "[job]\nkind = train\nenv = cartpole\nseeds = 1, 2, 3\ntotal_steps = 1000\n"
      "[algo]\nlr_actor = 1\nactor_hidden = 8,4\n"
      "[arm:stac]\nstackelberg = on\n[arm:ac]\n"));
  CHECK(c.kind == JobKind::Train);
  CHECK(c.seeds == std::vector<std::uint64_t>{1, 2, 3});
  REQUIRE(c.arms.size() == 2);
  CHECK(c.arms[0].name == "stac");
  CHECK(c.arms[0].algo.stackelberg);
  CHECK_FALSE(c.arms[1].algo.stackelberg);
  CHECK(c.arms[1].algo.lr_actor == 1.0);
  CHECK(c.arms[1].algo.actor_hidden == std::vector<std::size_t>{8, 4});

  auto fails = [](const std::string& text) { return parse_experiment(parse_ini(text)); };
  CHECK_THROWS_WITH_AS(fails("[job]\nkind = train\nenv = cartpole\n[algo]\nlamda = 1\n"),
                       "line 5: field 'lamda': unknown field", ConfigParseError);
  CHECK_THROWS_WITH_AS(fails("[job]\nkind = train\nenv = cartpole\nseeds = 1,1\n"),
                       "line 4: field 'seeds': duplicate seed 1", ConfigParseError);
  CHECK_THROWS_AS(fails("[job]\nkind = train\nenv = mountaincar\n"), ConfigParseError);
  CHECK_THROWS_AS(fails("[job]\nkind = train\n"), ConfigParseError);
  CHECK_THROWS_AS(fails("[job]\nkind = sweep\n"), ConfigParseError);
  CHECK_THROWS_AS(fails("[algo]\nlambda = 1\n"), ConfigParseError);
  CHECK_THROWS_AS(fails("[job]\nkind = train\nenv = cartpole\n[algo]\nstackelberg = on\nleader = critic\n"),
                  ConfigParseError);
  CHECK_THROWS_AS(fails("[job]\nkind = trajectory\n[algo]\nlambda = -1\n"), ConfigParseError);
  CHECK_THROWS_AS(fails("[job]\nkind = trajectory\n[game]\nname = chess\n"), ConfigParseError);
  CHECK_THROWS_AS(fails("[job]\nkind = trajectory\n[arm:a b]\n"), ConfigParseError);
}

TEST_CASE("format_double round-trips") {
  for (double x : {0.1, -1.0 / 3.0, 1e-310, 6.02214076e23, -0.0}) {
    const auto s = format_double(x);
    const double back = std::strtod(s.c_str(), nullptr);
    CHECK(back == x);
    CHECK(std::signbit(back) == std::signbit(x));
  }
  CHECK(format_double(1.0) == "1");
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("vector-field job writes two 441-row tables") {
  const auto dir = scratch("field");
  auto c = parse(
      "[job]\nkind = vector-field\n[game]\nn1 = 21\nn2 = 21\n"
      "[arm:individual]\nrule = individual\n[arm:stackelberg]\nrule = stackelberg\n",
      dir);
  const auto out = run_experiment(c, "field.ini");
  REQUIRE(out.artifacts.size() == 2);
  CHECK_FALSE(out.aborted());
  for (const auto& a : out.artifacts) {
    auto l = lines(a.path);
    REQUIRE(l.size() == 442);
    CHECK(l[0] == kVectorFieldHeader);
  }
  // Row (theta, w) = (-1, -1): individual motion (dJ/dtheta, -dL/dw) = (w, -2 theta (w theta + theta^2 / 5)).
  CHECK(lines(out.artifacts[0].path)[1] == "-1,-1,-1,2.3999999999999999,0");
  auto m = nlohmann::json::parse(slurp(out.manifest));
  CHECK(m["kind"] == "vector-field");
  CHECK(m["artifacts"].size() == 2);
  CHECK(m["config_hash"].get<std::string>().rfind("fnv1a64:", 0) == 0);
}

TEST_CASE("trajectory job: three error curves from (0.5, 0.5)") {
  const auto dir = scratch("traj");
  auto c = parse(
      "[job]\nkind = trajectory\n[game]\nx1 = 0.5\nx2 = 0.5\nsteps = 100\n"
      "[algo]\nalpha1 = 0.05\nalpha2 = 0.05\n"
      "[arm:individual]\nrule = individual\n"
      "[arm:stackelberg]\nrule = stackelberg\n"
      "[arm:regularized]\nrule = stackelberg\nlambda = 0.01\n",
      dir);
  const auto out = run_experiment(c);
  REQUIRE(out.artifacts.size() == 3);
  for (const auto& a : out.artifacts) {
    auto l = lines(a.path);
    REQUIRE(l.size() == 102);
    CHECK(l[0] == kTrajectoryHeader);
    CHECK(l[1] == "0,0.5,0.5,0.5");
  }
}

TEST_CASE("dse-check job at the origin") {
  const auto dir = scratch("dse");
  auto c = parse("[job]\nkind = dse-check\n[game]\nx1 = 0\nx2 = 0\n", dir);
  const auto out = run_experiment(c);
  auto l = lines(out.artifacts.at(0).path);
  REQUIRE(l.size() == 2);
  CHECK(l[0] == kDseHeader);
  CHECK(l[1].rfind("0,0,", 0) == 0);
}

TEST_CASE("train job: six runs, manifest, byte-identical reruns") {
  const auto dir = scratch("train");
  const std::string text =
      "[job]\nkind = train\nenv = cartpole\nseeds = 1, 2, 3\ntotal_steps = 400\nworkers = 3\n"
      "[algo]\nsteps_per_epoch = 100\nactor_hidden = 4\ncritic_hidden = 4\neval_every = 200\n"
      "eval_episodes = 1\nlr_actor = 1\n"
      "[arm:stac]\nstackelberg = on\n[arm:ac]\n";
  auto c = parse(text, dir / "a");
  const auto first = run_experiment(c);
  REQUIRE(first.artifacts.size() == 6);
  CHECK_FALSE(first.aborted());
  for (const auto& a : first.artifacts) {
    auto l = lines(a.path);
    REQUIRE(l.size() == 3);
    CHECK(l[0] == kTrainingHeader);
    CHECK(fs::exists(a.checkpoint));
  }
  c.output = (dir / "b").string();
  const auto second = run_experiment(c);
  for (std::size_t i = 0; i < first.artifacts.size(); ++i)
    CHECK(slurp(first.artifacts[i].path) == slurp(second.artifacts[i].path));

  auto m = nlohmann::json::parse(slurp(first.manifest));
  CHECK(m["config_hash"] == "fnv1a64:" + [&] {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(text)));
    return std::string(buf);
  }());
  CHECK(m["artifacts"][0]["seed"] == 1);
  CHECK(m["artifacts"][0]["status"] == "ok");

  std::vector<RunCurve> runs;
  for (const auto& a : first.artifacts) runs.push_back(read_run_csv(a.path));
  auto summary = compare_runs(runs, 450.0);
  REQUIRE(summary.size() == 2);
  CHECK(summary[0].arm == "stac");
  CHECK(summary[0].runs == 3);
}

TEST_CASE("output root override") {
  const auto dir = scratch("root");
  ::setenv("STAC_OUTPUT_ROOT", dir.c_str(), 1);
  CHECK(resolve_output_dir("runs/x") == (dir / "runs/x").string());
  CHECK(resolve_output_dir("/abs/x") == "/abs/x");
  ::unsetenv("STAC_OUTPUT_ROOT");
  CHECK(resolve_output_dir("runs/x") == "runs/x");
}

TEST_CASE("compare by hand") {
  const auto dir = scratch("compare");
  const std::string h = std::string(kTrainingHeader) + "\n";
  write(dir / "stac_seed1.csv", h + "100,10,0,0,0,0,0,0,0\n200,460,0,0,0,0,0,1,0\n");
  write(dir / "stac_seed2.csv", h + "100,20,0,0,0,0,0,0,0\n200,440,0,0,0,0,0,0,0\n");
  write(dir / "ac_seed1.csv", h + "100,5,0,0,0,0,0,0,0\n");
  write(dir / "ac_seed2.csv", h + "100,5,0,0,0,0,0,0,0\n");
  std::vector<RunCurve> runs;
  for (auto n : {"stac_seed1.csv", "stac_seed2.csv", "ac_seed1.csv", "ac_seed2.csv"})
    runs.push_back(read_run_csv((dir / n).string()));
  auto s = compare_runs(runs, 450.0);
  REQUIRE(s.size() == 2);
  CHECK(s[0].arm == "stac");
  CHECK(s[0].final_mean == 450.0);
  CHECK(s[0].final_std == 10.0);
  CHECK(s[0].steps_to_threshold[0] == 200.0);
  CHECK(std::isinf(s[0].steps_to_threshold[1]));
  CHECK(std::isinf(s[0].median_steps));
  CHECK(s[0].fallback_rate == 0.25);
  CHECK(s[1].final_std == 0.0);
  CHECK(s[1].final_mean == 5.0);

  auto single = compare_runs({runs[0]}, 450.0);
  CHECK(single[0].final_mean == 460.0);
  CHECK(single[0].median_steps == 200.0);
  CHECK(format_summary(single, 450.0).find("stac,1,460,0,200,200,0.5") != std::string::npos);

  CHECK(default_threshold("CartPole") == 450.0);
  CHECK(default_threshold("pendulum") == -300.0);
  CHECK(arm_of("/x/stdddpg-al_seed12.csv") == "stdddpg-al");
  CHECK(arm_of("/x/run.csv") == "run");

  write(dir / "bad_header.csv", "step,return\n1,2\n");
  CHECK_THROWS_AS(read_run_csv((dir / "bad_header.csv").string()), SchemaError);
  write(dir / "short_row.csv", h + "1,2,3\n");
  CHECK_THROWS_AS(read_run_csv((dir / "short_row.csv").string()), SchemaError);
  write(dir / "steps_back.csv", h + "2,0,0,0,0,0,0,0,0\n1,0,0,0,0,0,0,0,0\n");
  CHECK_THROWS_AS(read_run_csv((dir / "steps_back.csv").string()), SchemaError);
}

TEST_CASE("tool exit codes") {
  const auto dir = scratch("tool");
  write(dir / "bad.ini", "[job]\nkind = train\nenv = cartpole\n[algo]\nbogus = 1\n");
  CHECK(run_tool("run " + (dir / "bad.ini").string()) == 1);
  CHECK(run_tool("run " + (dir / "missing.ini").string()) == 1);
  write(dir / "ok.ini", "[job]\nkind = dse-check\noutput = out\n");
  const std::string env = "STAC_OUTPUT_ROOT=" + dir.string() + " ";
  CHECK(std::system((env + STAC_TOOL + " run " + (dir / "ok.ini").string() + " > /dev/null").c_str()) == 0);
  CHECK(fs::exists(dir / "out" / "manifest.json"));
  // Diverging training aborts with code 2 and keeps its checkpoint.
  write(dir / "boom.ini",
        "[job]\nkind = train\nenv = cartpole\ntotal_steps = 400\noutput = boom\n"
        "[algo]\nsteps_per_epoch = 100\nactor_hidden = 4\ncritic_hidden = 4\nlr_critic = 1e300\n"
        "eval_every = 200\neval_episodes = 1\n");
  CHECK(std::system((env + STAC_TOOL + " run " + (dir / "boom.ini").string() + " > /dev/null 2>&1").c_str()) ==
        2 << 8);
  CHECK(fs::exists(dir / "boom" / "default_seed0.ckpt"));
  CHECK(run_tool("compare " + (dir / "bad.ini").string()) == 1);
  CHECK(run_tool("frobnicate") == 1);
}

TEST_CASE("shipped configs parse") {
  int n = 0;
  for (const auto& entry : fs::directory_iterator(STAC_CONFIG_DIR)) {
    if (entry.path().extension() != ".ini") continue;
    CAPTURE(entry.path().string());
    CHECK_NOTHROW(load_experiment(entry.path().string()));
    ++n;
  }
  CHECK(n >= 5);
}
