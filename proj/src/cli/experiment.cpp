#include "stac/cli/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "stac/env/env.hpp"

namespace stac::cli {

namespace fs = std::filesystem;

JobKind parse_job_kind(const std::string& s) {
  if (s == "train") return JobKind::Train;
  if (s == "vector-field") return JobKind::VectorField;
  if (s == "trajectory") return JobKind::Trajectory;
  if (s == "dse-check") return JobKind::DseCheck;
  throw ConfigParseError("unknown job kind '" + s + "'");
}

const char* job_kind_name(JobKind k) {
  switch (k) {
    case JobKind::Train: return "train";
    case JobKind::VectorField: return "vector-field";
    case JobKind::Trajectory: return "trajectory";
    case JobKind::DseCheck: return "dse-check";
  }
  return "?";
}

game::Rule Arm::rule() const {
  return algo.stackelberg ? game::Rule::Stackelberg : game::Rule::Individual;
}

game::LeaderConfig Arm::leader_config() const {
  game::LeaderConfig lc;
  lc.leader = algo.leader == rl::LeaderRole::Actor ? game::Player::First : game::Player::Second;
  lc.lambda = algo.lambda;
  lc.cg_iters = algo.cg_iters;
  lc.cg_tol = algo.cg_tol;
  lc.unroll_m = algo.unroll_m;
  return lc;
}

namespace {

[[noreturn]] void bad(const IniEntry& e, const std::string& why) {
  throw ConfigParseError("line " + std::to_string(e.line) + ": field '" + e.key + "': " + why);
}

// Whole-string decimal; subnormals are accepted.
std::optional<double> parse_double(const std::string& s) {
  if (s.empty() || std::isspace(static_cast<unsigned char>(s.front()))) return std::nullopt;
  char* end = nullptr;
  const double x = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) return std::nullopt;
  return x;
}

double to_double(const IniEntry& e) {
  const auto x = parse_double(e.value);
  if (!x) bad(e, "not a number");
  if (!std::isfinite(*x)) bad(e, "not a finite number");
  return *x;
}

std::uint64_t to_uint(const IniEntry& e, const std::string& text) {
  if (text.empty() || !std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isdigit(c); }))
    bad(e, "not a nonnegative integer");
  try {
    return std::stoull(text);
  } catch (const std::logic_error&) {
    bad(e, "integer out of range");
  }
}

std::uint64_t to_uint(const IniEntry& e) { return to_uint(e, e.value); }

int to_int(const IniEntry& e) {
  const auto v = to_uint(e);
  if (v > static_cast<std::uint64_t>(std::numeric_limits<int>::max())) bad(e, "integer out of range");
  return static_cast<int>(v);
}

bool to_bool(const IniEntry& e) {
  if (e.value == "on" || e.value == "true" || e.value == "1" || e.value == "yes") return true;
  if (e.value == "off" || e.value == "false" || e.value == "0" || e.value == "no") return false;
  bad(e, "expected on/off");
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto en = item.find_last_not_of(" \t");
    out.push_back(b == std::string::npos ? "" : item.substr(b, en - b + 1));
  }
  return out;
}

std::vector<std::size_t> to_widths(const IniEntry& e) {
  std::vector<std::size_t> w;
  for (const auto& item : split_list(e.value)) w.push_back(static_cast<std::size_t>(to_uint(e, item)));
  if (w.empty()) bad(e, "empty list");
  return w;
}

void apply_arm_key(Arm& arm, const IniEntry& e) {
  auto& a = arm.algo;
  const auto& k = e.key;
  if (k == "algo") {
    try {
      a.algo = rl::parse_algo(e.value);
    } catch (const rl::ConfigError& err) {
      bad(e, err.what());
    }
  } else if (k == "stackelberg") {
    a.stackelberg = to_bool(e);
  } else if (k == "rule") {
    if (e.value == "individual") a.stackelberg = false;
    else if (e.value == "stackelberg") a.stackelberg = true;
    else bad(e, "expected individual or stackelberg");
  } else if (k == "leader") {
    if (e.value == "actor" || e.value == "AL" || e.value == "first") a.leader = rl::LeaderRole::Actor;
    else if (e.value == "critic" || e.value == "CL" || e.value == "second") a.leader = rl::LeaderRole::Critic;
    else bad(e, "expected actor or critic");
  } else if (k == "lambda") {
    a.lambda = to_double(e);
  } else if (k == "cg_iters") {
    a.cg_iters = to_int(e);
  } else if (k == "cg_tol") {
    a.cg_tol = to_double(e);
  } else if (k == "unroll_m") {
    a.unroll_m = to_int(e);
  } else if (k == "gamma") {
    a.gamma = to_double(e);
  } else if (k == "gae_lambda") {
    a.gae_lambda = to_double(e);
  } else if (k == "eta") {
    a.eta = to_double(e);
  } else if (k == "polyak") {
    a.polyak = to_double(e);
  } else if (k == "batch_size") {
    a.batch_size = to_uint(e);
  } else if (k == "steps_per_epoch") {
    a.steps_per_epoch = to_uint(e);
  } else if (k == "lr_actor") {
    a.lr_actor = to_double(e);
  } else if (k == "lr_critic") {
    a.lr_critic = to_double(e);
  } else if (k == "actor_hidden") {
    a.actor_hidden = to_widths(e);
  } else if (k == "critic_hidden") {
    a.critic_hidden = to_widths(e);
  } else if (k == "activation") {
    try {
      a.activation = nets::parse_activation(e.value);
    } catch (const std::invalid_argument& err) {
      bad(e, err.what());
    }
  } else if (k == "replay_capacity") {
    a.replay_capacity = to_uint(e);
  } else if (k == "start_steps") {
    a.start_steps = to_uint(e);
  } else if (k == "update_after") {
    a.update_after = to_uint(e);
  } else if (k == "update_every") {
    a.update_every = to_uint(e);
  } else if (k == "act_noise") {
    a.act_noise = to_double(e);
  } else if (k == "eval_every") {
    a.eval_every = to_uint(e);
  } else if (k == "eval_episodes") {
    a.eval_episodes = to_uint(e);
  } else if (k == "checkpoint_every") {
    a.checkpoint_every = to_uint(e);
  } else if (k == "wall_clock") {
    a.wall_clock = to_bool(e);
  } else if (k == "alpha1") {
    arm.alpha1 = to_double(e);
  } else if (k == "alpha2") {
    arm.alpha2 = to_double(e);
  } else {
    bad(e, "unknown field");
  }
}

void apply_game_key(GameSetup& g, const IniEntry& e) {
  const auto& k = e.key;
  if (k == "name") {
    if (e.value != "motivating" && e.value != "entropic") bad(e, "expected motivating or entropic");
    g.name = e.value;
  } else if (k == "eta") {
    g.entropic.eta = to_double(e);
  } else if (k == "sigma") {
    g.entropic.sigma = to_double(e);
  } else if (k == "samples") {
    g.entropic.mc_samples = to_int(e);
  } else if (k == "x1") {
    g.x1 = to_double(e);
  } else if (k == "x2") {
    g.x2 = to_double(e);
  } else if (k == "c1") {
    g.c1 = to_double(e);
  } else if (k == "c2") {
    g.c2 = to_double(e);
  } else if (k == "steps") {
    g.steps = to_int(e);
  } else if (k == "lo1") {
    g.grid.lo1 = to_double(e);
  } else if (k == "hi1") {
    g.grid.hi1 = to_double(e);
  } else if (k == "lo2") {
    g.grid.lo2 = to_double(e);
  } else if (k == "hi2") {
    g.grid.hi2 = to_double(e);
  } else if (k == "n1") {
    g.grid.n1 = to_int(e);
  } else if (k == "n2") {
    g.grid.n2 = to_int(e);
  } else if (k == "tol") {
    g.tol = to_double(e);
  } else if (k == "fd_step") {
    g.fd_step = to_double(e);
  } else {
    bad(e, "unknown field");
  }
}

void apply_job_key(ExperimentConfig& c, const IniEntry& e) {
  const auto& k = e.key;
  if (k == "kind") {
    try {
      c.kind = parse_job_kind(e.value);
    } catch (const ConfigParseError& err) {
      bad(e, err.what());
    }
  } else if (k == "name") {
    c.name = e.value;
  } else if (k == "seeds") {
    c.seeds.clear();
    std::set<std::uint64_t> seen;
    for (const auto& item : split_list(e.value)) {
      const auto s = to_uint(e, item);
      if (!seen.insert(s).second) bad(e, "duplicate seed " + item);
      c.seeds.push_back(s);
    }
    if (c.seeds.empty()) bad(e, "no seeds");
  } else if (k == "output") {
    if (e.value.empty()) bad(e, "empty path");
    c.output = e.value;
  } else if (k == "workers") {
    c.workers = to_uint(e);
  } else if (k == "env") {
    c.env = e.value;
  } else if (k == "total_steps") {
    c.total_steps = to_uint(e);
  } else {
    bad(e, "unknown field");
  }
}

bool valid_arm_name(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '-' || c == '_' || c == '.';
  });
}

[[noreturn]] void bad_section(const IniSection& s, const std::string& why) {
  throw ConfigParseError("line " + std::to_string(s.line) + ": [" + s.name + "]: " + why);
}

}  // namespace

ExperimentConfig parse_experiment(const std::vector<IniSection>& sections) {
  ExperimentConfig c;
  Arm base;
  base.name = "default";
  const IniSection* job = nullptr;
  std::vector<const IniSection*> arm_sections;
  for (const auto& s : sections) {
    if (s.name == "job") {
      job = &s;
      for (const auto& e : s.entries) apply_job_key(c, e);
    } else if (s.name == "game") {
      for (const auto& e : s.entries) apply_game_key(c.game, e);
    } else if (s.name == "algo") {
      for (const auto& e : s.entries) apply_arm_key(base, e);
    } else if (s.name.rfind("arm:", 0) == 0) {
      arm_sections.push_back(&s);
    } else if (s.name.empty()) {
      bad(s.entries.front(), "entry outside any section");
    } else {
      bad_section(s, "unknown section");
    }
  }
  if (!job) throw ConfigParseError("missing [job] section");
  if (!job->find("kind")) bad_section(*job, "missing field 'kind'");

  for (const auto* s : arm_sections) {
    Arm arm = base;
    arm.name = s->name.substr(4);
    if (!valid_arm_name(arm.name)) bad_section(*s, "arm names use letters, digits, '-', '_' and '.'");
    for (const auto& a : c.arms)
      if (a.name == arm.name) bad_section(*s, "duplicate arm");
    for (const auto& e : s->entries) apply_arm_key(arm, e);
    c.arms.push_back(std::move(arm));
  }
  if (c.arms.empty()) c.arms.push_back(base);

  for (const auto& arm : c.arms) {
    const std::string where = "arm '" + arm.name + "': ";
    try {
      if (c.kind == JobKind::Train) {
        arm.algo.validate();
      } else {
        arm.leader_config().validate();
      }
    } catch (const std::invalid_argument& err) {
      throw ConfigParseError(where + err.what());
    }
  }
  if (c.kind == JobKind::Train) {
    const auto* e = job->find("env");
    if (!e) bad_section(*job, "train jobs need field 'env'");
    try {
      (void)env::make_env(c.env);
    } catch (const std::invalid_argument& err) {
      bad(*e, err.what());
    }
    if (c.total_steps == 0) bad(*job->find("total_steps"), "must be positive");
  } else {
    if (c.game.grid.n1 < 1 || c.game.grid.n2 < 1) throw ConfigParseError("[game]: grid needs n1, n2 >= 1");
    if (c.game.steps < 0) throw ConfigParseError("[game]: steps must be nonnegative");
    if (c.game.entropic.mc_samples < 1) throw ConfigParseError("[game]: samples must be positive");
  }
  return c;
}

ExperimentConfig load_experiment(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigParseError("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  auto c = parse_experiment(parse_ini(ss.str()));
  c.source = ss.str();
  return c;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string resolve_output_dir(const std::string& output) {
  const char* root = std::getenv("STAC_OUTPUT_ROOT");
  fs::path p(output);
  if (root && *root && p.is_relative()) p = fs::path(root) / p;
  return p.string();
}

bool RunOutcome::aborted() const {
  return std::any_of(artifacts.begin(), artifacts.end(), [](const Artifact& a) { return !a.ok; });
}

game::TwoPlayerGame make_game(const GameSetup& g, std::uint64_t seed) {
  if (g.name == "entropic") return examples::entropic_game(g.entropic, seed);
  return examples::motivating_game();
}

namespace {

class CsvFile {
 public:
  CsvFile(const std::string& path, const char* header) : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw std::runtime_error("cannot write " + path);
    out_ << header << '\n';
  }
  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) out_ << (i ? "," : "") << fields[i];
    out_ << '\n';
    out_.flush();
  }

 private:
  std::ofstream out_;
};

game::JointPoint point(double x1, double x2) {
  return {diff::ParamVector(std::vector<double>{x1}), diff::ParamVector(std::vector<double>{x2})};
}

double min_of(const std::vector<double>& v) {
  return v.empty() ? std::numeric_limits<double>::quiet_NaN() : *std::min_element(v.begin(), v.end());
}

void run_game_job(const ExperimentConfig& c, const Arm& arm, std::uint64_t seed, const std::string& path) {
  const auto g = make_game(c.game, seed);
  const auto lc = arm.leader_config();
  switch (c.kind) {
    case JobKind::VectorField: {
      CsvFile csv(path, kVectorFieldHeader);
      for (const auto& r : game::sample_vector_field(g, arm.rule(), lc, c.game.grid))
        csv.row({format_double(r.x1), format_double(r.x2), format_double(r.dx1), format_double(r.dx2),
                 r.fallback ? "1" : "0"});
      break;
    }
    case JobKind::Trajectory: {
      CsvFile csv(path, kTrajectoryHeader);
      const auto traj = game::integrate(g, point(c.game.x1, c.game.x2), arm.rule(), lc, arm.alpha1,
                                        arm.alpha2, c.game.steps);
      for (std::size_t k = 0; k < traj.size(); ++k)
        csv.row({std::to_string(k), format_double(traj[k].x1[0]), format_double(traj[k].x2[0]),
                 format_double(examples::squared_error(traj[k], c.game.c1, c.game.c2))});
      break;
    }
    case JobKind::DseCheck: {
      CsvFile csv(path, kDseHeader);
      const auto rep = game::check_dse(g, point(c.game.x1, c.game.x2), c.game.tol, lc.leader, c.game.fd_step);
      csv.row({format_double(c.game.x1), format_double(c.game.x2), game::verdict_name(rep.verdict),
               rep.failed_condition, format_double(rep.leader_total_grad_norm),
               format_double(rep.follower_grad_norm), format_double(min_of(rep.follower_hessian_eigenvalues)),
               format_double(min_of(rep.leader_hessian_sym))});
      break;
    }
    case JobKind::Train:
      break;
  }
}

void run_train_job(const ExperimentConfig& c, const Arm& arm, std::uint64_t seed, Artifact& art) {
  auto cfg = arm.algo;
  cfg.seed = seed;
  const auto env = env::make_env(c.env);
  CsvFile csv(art.path, kTrainingHeader);
  rl::TrainHooks hooks;
  hooks.checkpoint_path = art.checkpoint;
  hooks.on_record = [&csv](const rl::RunRecord& r) {
    csv.row({std::to_string(r.step), format_double(r.eval_return_mean), format_double(r.eval_return_std),
             format_double(r.leader_grad_norm), format_double(r.follower_grad_norm),
             format_double(r.correction_norm), format_double(r.cg_residual), std::to_string(r.fallback),
             format_double(r.wall_seconds)});
  };
  rl::train(*env, cfg, c.total_steps, hooks);
}

std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

RunOutcome run_experiment(const ExperimentConfig& c, const std::string& config_path) {
  RunOutcome out;
  out.output_dir = resolve_output_dir(c.output);
  fs::create_directories(out.output_dir);

  for (const auto& arm : c.arms) {
    for (auto seed : c.seeds) {
      Artifact a;
      a.arm = arm.name;
      a.seed = seed;
      const std::string stem = arm.name + "_seed" + std::to_string(seed);
      a.path = (fs::path(out.output_dir) / (stem + ".csv")).string();
      if (c.kind == JobKind::Train) a.checkpoint = (fs::path(out.output_dir) / (stem + ".ckpt")).string();
      out.artifacts.push_back(std::move(a));
    }
  }

  std::size_t workers = c.workers ? c.workers : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, out.artifacts.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < out.artifacts.size(); i = next++) {
      auto& art = out.artifacts[i];
      const auto& arm = c.arms[i / c.seeds.size()];
      try {
        if (c.kind == JobKind::Train) run_train_job(c, arm, art.seed, art);
        else run_game_job(c, arm, art.seed, art.path);
      } catch (const std::exception& e) {
        art.ok = false;
        art.error = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  nlohmann::json m;
  m["name"] = c.name;
  m["kind"] = job_kind_name(c.kind);
  m["config_path"] = config_path;
  m["config_hash"] = "fnv1a64:" + hex64(fnv1a64(c.source));
  if (c.kind == JobKind::Train) {
    m["env"] = c.env;
    m["total_steps"] = c.total_steps;
  }
  m["artifacts"] = nlohmann::json::array();
  for (const auto& a : out.artifacts) {
    nlohmann::json j{{"arm", a.arm}, {"seed", a.seed}, {"path", a.path}, {"status", a.ok ? "ok" : "aborted"}};
    if (!a.checkpoint.empty()) j["checkpoint"] = a.checkpoint;
    if (!a.ok) j["error"] = a.error;
    m["artifacts"].push_back(std::move(j));
  }
  out.manifest = (fs::path(out.output_dir) / "manifest.json").string();
  std::ofstream mf(out.manifest, std::ios::binary | std::ios::trunc);
  mf << m.dump(2) << '\n';
  if (!mf) throw std::runtime_error("cannot write " + out.manifest);
  return out;
}

// compare

std::string arm_of(const std::string& path) {
  std::string stem = fs::path(path).stem().string();
  const auto pos = stem.rfind("_seed");
  if (pos != std::string::npos && pos + 5 < stem.size() &&
      std::all_of(stem.begin() + static_cast<std::ptrdiff_t>(pos + 5), stem.end(),
                  [](unsigned char ch) { return std::isdigit(ch); }))
    stem.resize(pos);
  return stem;
}

RunCurve read_run_csv(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw SchemaError("cannot open " + path);
  RunCurve run;
  run.path = path;
  run.arm = arm_of(path);
  std::string line;
  if (!std::getline(f, line) || line != kTrainingHeader) throw SchemaError(path + ": header does not match the training schema");
  int n = 1;
  while (std::getline(f, line)) {
    ++n;
    if (line.empty()) continue;
    const auto fields = split_list(line);
    const std::string where = path + ":" + std::to_string(n) + ": ";
    if (fields.size() != 9) throw SchemaError(where + "expected 9 fields");
    auto num = [&](std::size_t i) {
      const auto x = parse_double(fields[i]);
      if (!x) throw SchemaError(where + "field " + std::to_string(i + 1) + " is not a number");
      return *x;
    };
    rl::RunRecord r;
    const double step = num(0);
    if (step < 0 || step != std::floor(step)) throw SchemaError(where + "step is not a nonnegative integer");
    r.step = static_cast<std::size_t>(step);
    r.eval_return_mean = num(1);
    r.eval_return_std = num(2);
    r.leader_grad_norm = num(3);
    r.follower_grad_norm = num(4);
    r.correction_norm = num(5);
    r.cg_residual = num(6);
    const double fb = num(7);
    if (fb != 0.0 && fb != 1.0) throw SchemaError(where + "fallback must be 0 or 1");
    r.fallback = static_cast<int>(fb);
    r.wall_seconds = num(8);
    if (!run.rows.empty() && r.step <= run.rows.back().step) throw SchemaError(where + "steps must increase");
    run.rows.push_back(r);
  }
  return run;
}

double default_threshold(const std::string& env) {
  std::string e = env;
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char ch) { return std::tolower(ch); });
  if (e == "cartpole") return 450.0;
  if (e == "pendulum") return -300.0;
  throw std::invalid_argument("no default threshold for environment '" + env + "'");
}

double steps_to_threshold(const RunCurve& run, double threshold) {
  for (const auto& r : run.rows)
    if (r.eval_return_mean >= threshold) return static_cast<double>(r.step);
  return std::numeric_limits<double>::infinity();
}

std::vector<ArmSummary> compare_runs(const std::vector<RunCurve>& runs, double threshold) {
  std::vector<ArmSummary> out;
  std::map<std::string, std::size_t> index;
  std::vector<std::vector<const RunCurve*>> groups;
  for (const auto& r : runs) {
    if (r.rows.empty()) throw SchemaError(r.path + ": no rows");
    auto [it, fresh] = index.try_emplace(r.arm, groups.size());
    if (fresh) groups.emplace_back();
    groups[it->second].push_back(&r);
  }
  for (const auto& group : groups) {
    ArmSummary s;
    s.arm = group.front()->arm;
    s.runs = group.size();
    std::size_t rows = 0, flagged = 0;
    for (const auto* r : group) {
      s.final_mean += r->rows.back().eval_return_mean;
      s.steps_to_threshold.push_back(steps_to_threshold(*r, threshold));
      for (const auto& row : r->rows) {
        ++rows;
        flagged += row.fallback ? 1 : 0;
      }
    }
    s.final_mean /= static_cast<double>(s.runs);
    for (const auto* r : group) s.final_std += std::pow(r->rows.back().eval_return_mean - s.final_mean, 2);
    s.final_std = std::sqrt(s.final_std / static_cast<double>(s.runs));
    auto sorted = s.steps_to_threshold;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t mid = sorted.size() / 2;
    s.median_steps = sorted.size() % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
    s.fallback_rate = static_cast<double>(flagged) / static_cast<double>(rows);
    out.push_back(std::move(s));
  }
  return out;
}

std::string format_summary(const std::vector<ArmSummary>& arms, double threshold) {
  auto steps = [](double x) { return std::isinf(x) ? std::string("inf") : format_double(x); };
  std::ostringstream os;
  os << "threshold " << format_double(threshold) << '\n';
  os << "arm,runs,final_return_mean,final_return_std,median_steps_to_threshold,steps_to_threshold,fallback_rate\n";
  for (const auto& a : arms) {
    std::string per;
    for (std::size_t i = 0; i < a.steps_to_threshold.size(); ++i) per += (i ? " " : "") + steps(a.steps_to_threshold[i]);
    os << a.arm << ',' << a.runs << ',' << format_double(a.final_mean) << ',' << format_double(a.final_std) << ','
       << steps(a.median_steps) << ',' << per << ',' << format_double(a.fallback_rate) << '\n';
  }
  return os.str();
}

}  // namespace stac::cli
