#include "dan/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dan/bench.hpp"
#include "dan/errors.hpp"
#include "dan/instance.hpp"
#include "dan/plot.hpp"
#include "dan/training.hpp"

namespace dan {

namespace fs = std::filesystem;

std::atomic<bool>& train_stop_flag() {
  static std::atomic<bool> flag{false};
  return flag;
}

namespace {

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return (v && *v) ? std::string(v) : fallback;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const std::string& path, const std::string& text) {
  const fs::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write " + path);
  out << text;
  if (!out.flush()) throw InvalidArgument("write failed: " + path);
}

void make_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw InvalidArgument("cannot create directory " + dir);
}

MtspInstance load_instance(const std::string& path, int m) {
  MtspInstance inst = read_instance(path, m);
  if (inst.name.empty()) inst.name = fs::path(path).stem().string();
  return inst;
}

// ---- generate

struct GenerateArgs {
  int n = 50;
  int m = 5;
  int count = 1;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_generate(const GenerateArgs& a, std::ostream& out) {
  if (a.count < 1) throw InvalidArgument("--count must be >= 1");
  // validate once up front so nothing is written on bad arguments
  generate_instance(a.n, a.m, 0);
  const std::string dir = a.out.empty() ? env_or("DAN_OUT_DIR", ".") : a.out;
  make_dir(dir);
  nlohmann::json manifest = {{"n", a.n}, {"m", a.m}, {"count", a.count}, {"seed", a.seed}};
  manifest["instances"] = nlohmann::json::array();
  for (int i = 0; i < a.count; ++i) {
    const std::uint64_t s = derive_seed(a.seed, {static_cast<std::uint64_t>(i)});
    char name[96];
    std::snprintf(name, sizeof name, "mtsp_n%d_m%d_%04d", a.n, a.m, i);
    MtspInstance inst = generate_instance(a.n, a.m, s);
    inst.name = name;
    const std::string file = std::string(name) + ".json";
    write_instance((fs::path(dir) / file).string(), inst);
    manifest["instances"].push_back({{"file", file}, {"seed", s}});
  }
  write_text((fs::path(dir) / "manifest.json").string(), manifest.dump(2) + "\n");
  out << "wrote " << a.count << " instance(s) to " << dir << "\n";
  return 0;
}

// ---- solve

struct SolveArgs {
  std::string instance;
  std::string solver = "dan-greedy";
  std::string checkpoint;
  int samples = 64;
  double dg = kEvalDg;
  std::uint64_t seed = 0;
  std::string out;
  int m = 0;
  int workers = 1;
};

std::optional<DanParameters> maybe_load_model(const std::vector<std::string>& solvers, const std::string& flag) {
  const bool needed = std::any_of(solvers.begin(), solvers.end(), is_dan_solver);
  if (!needed) return std::nullopt;
  const std::string path = flag.empty() ? env_or("DAN_CHECKPOINT", "") : flag;
  if (path.empty()) return std::nullopt;
  if (!fs::exists(path)) throw InvalidArgument("checkpoint not found: " + path);
  return load_model(path);
}

int cmd_solve(const SolveArgs& a, std::ostream& out) {
  if (std::find(kSolverIds.begin(), kSolverIds.end(), a.solver) == kSolverIds.end()) {
    throw InvalidArgument("unknown solver '" + a.solver + "'");
  }
  const MtspInstance inst = load_instance(a.instance, a.m);
  const auto params = maybe_load_model({a.solver}, a.checkpoint);
  if (is_dan_solver(a.solver) && !params) {
    throw InvalidArgument("solver " + a.solver + " needs a checkpoint (--checkpoint or DAN_CHECKPOINT)");
  }
  const SolveOutcome r =
      run_solver(a.solver, inst, params ? &*params : nullptr, a.samples, a.dg, a.seed, a.workers);
  if (!a.out.empty()) write_text(a.out, solution_to_json(inst, a.solver, a.seed, r.solution, r.wall_ms));
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s %s n=%d m=%d minmax=%.6f minmax_source=%.6f wall_ms=%.3f\n", inst.name.c_str(),
                a.solver.c_str(), inst.n(), inst.m, r.solution.minmax, r.solution.minmax * inst.scale, r.wall_ms);
  out << buf;
  return 0;
}

// ---- train

struct TrainArgs {
  std::string config;
  std::string resume;
  std::string out_dir;
  long steps = -1;
};

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  if (a.config.empty() && a.resume.empty()) throw InvalidArgument("train needs --config or --resume");
  const std::string dir = a.out_dir.empty() ? env_or("DAN_OUT_DIR", "runs") : a.out_dir;
  make_dir(dir);

  TrainingState state = a.resume.empty() ? init_training(trainer_config_from_json(slurp(a.config)))
                                         : load_checkpoint(a.resume);
  if (a.steps >= 0) state.config.steps = a.steps;

  const std::string ckpt = (fs::path(dir) / "checkpoint.bin").string();
  const std::string log_path = (fs::path(dir) / "train_log.jsonl").string();
  std::ofstream log(log_path, a.resume.empty() ? std::ios::trunc : std::ios::app);
  if (!log) throw InvalidArgument("cannot write " + log_path);

  auto& stop = train_stop_flag();
  while (state.step < state.config.steps && !stop.load()) {
    TrainMetrics mtr;
    try {
      mtr = train_step(state);
    } catch (const TrainingDivergence& e) {
      save_checkpoint(state, ckpt);
      throw TrainingDivergence("step " + std::to_string(state.step + 1) + ": " + e.what());
    }
    log << metrics_to_json_line(mtr) << '\n';
    log.flush();
    if (state.config.checkpoint_every > 0 && state.step % state.config.checkpoint_every == 0) {
      save_checkpoint(state, ckpt);
    }
  }
  save_checkpoint(state, ckpt);
  if (stop.load()) err << "interrupted at step " << state.step << "; checkpoint written\n";
  out << "step " << state.step << " checkpoint " << ckpt << "\n";
  return 0;
}

// ---- bench

struct BenchArgs {
  std::string instances;
  std::vector<std::string> solvers{"nn", "nn2opt"};
  std::string out;
  std::string checkpoint;
  int samples = 64;
  double dg = kEvalDg;
  std::uint64_t seed = 0;
  int m = 0;
  int workers = 1;
};

std::vector<std::string> instance_files(const std::string& where) {
  std::vector<std::string> files;
  if (fs::is_regular_file(where)) return {where};
  if (!fs::is_directory(where)) throw InvalidArgument("no such instance file or directory: " + where);
  for (const auto& e : fs::directory_iterator(where)) {
    if (!e.is_regular_file()) continue;
    const auto name = e.path().filename().string();
    const auto ext = e.path().extension().string();
    if (name == "manifest.json") continue;
    if (ext == ".json" || ext == ".tsp") files.push_back(e.path().string());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw InvalidArgument("no instance files in " + where);
  return files;
}

int cmd_bench(const BenchArgs& a, std::ostream& out) {
  for (const auto& s : a.solvers) {
    if (std::find(kSolverIds.begin(), kSolverIds.end(), s) == kSolverIds.end()) {
      throw InvalidArgument("unknown solver '" + s + "'");
    }
  }
  std::vector<MtspInstance> instances;
  for (const auto& f : instance_files(a.instances)) instances.push_back(load_instance(f, a.m));
  const auto params = maybe_load_model(a.solvers, a.checkpoint);

  BenchOptions opts;
  opts.solvers = a.solvers;
  opts.params = params ? &*params : nullptr;
  opts.samples = a.samples;
  opts.dg = a.dg;
  opts.seed = a.seed;
  opts.workers = a.workers;
  const auto rows = run_bench(instances, opts);

  std::ostringstream csv;
  write_bench_csv(csv, rows);
  if (a.out.empty()) {
    out << csv.str();
  } else {
    write_text(a.out, csv.str());
  }
  out << format_bench_table(rows);
  int failed = 0;
  for (const auto& r : rows) {
    if (!r.failed) continue;
    ++failed;
    out << "failed: " << r.instance << " " << r.solver << ": " << r.error << "\n";
  }
  return failed ? 1 : 0;
}

// ---- plot

struct PlotArgs {
  std::string instance;
  std::string solution;
  std::string out;
  int m = 0;
};

int cmd_plot(const PlotArgs& a, std::ostream& out) {
  const MtspInstance inst = load_instance(a.instance, a.m);
  const Solution sol = solution_from_json(inst, slurp(a.solution));
  const std::string svg = render_svg(inst, sol);
  if (a.out.empty()) {
    out << svg;
  } else {
    write_text(a.out, svg);
  }
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"MinMax mTSP toolkit: decentralized attention policy, trainer and baselines", "dan"};
  app.require_subcommand(1);

  GenerateArgs ga;
  auto* gen = app.add_subcommand("generate", "write random instances in the unit square");
  gen->add_option("--n", ga.n, "cities including the depot")->required();
  gen->add_option("--m", ga.m, "agents")->required();
  gen->add_option("--count", ga.count, "number of instances")->capture_default_str();
  gen->add_option("--seed", ga.seed, "base seed")->capture_default_str();
  gen->add_option("--out", ga.out, "output directory (default $DAN_OUT_DIR or .)");

  SolveArgs sa;
  auto* sol = app.add_subcommand("solve", "solve one instance");
  sol->add_option("--instance", sa.instance, "instance JSON or TSPLIB file")->required();
  sol->add_option("--solver", sa.solver, "dan-greedy|dan-sample|random|nn|nn2opt")->capture_default_str();
  sol->add_option("--checkpoint", sa.checkpoint, "model checkpoint (default $DAN_CHECKPOINT)");
  sol->add_option("--samples", sa.samples, "rollouts for dan-sample")->capture_default_str();
  sol->add_option("--dg", sa.dg, "time step")->capture_default_str();
  sol->add_option("--seed", sa.seed, "seed")->capture_default_str();
  sol->add_option("--out", sa.out, "solution file");
  sol->add_option("--m", sa.m, "agent count (required for TSPLIB input)");
  sol->add_option("--workers", sa.workers, "threads for sampling")->capture_default_str();

  TrainArgs ta;
  auto* tr = app.add_subcommand("train", "train a policy");
  tr->add_option("--config", ta.config, "trainer config JSON");
  tr->add_option("--resume", ta.resume, "training checkpoint to continue from");
  tr->add_option("--out-dir", ta.out_dir, "checkpoint and log directory (default $DAN_OUT_DIR or runs)");
  tr->add_option("--steps", ta.steps, "override the configured step count");

  BenchArgs ba;
  auto* be = app.add_subcommand("bench", "run solvers over a set of instances");
  be->add_option("--instances", ba.instances, "directory of instance files (or a single file)")->required();
  be->add_option("--solvers", ba.solvers, "comma-separated solver ids")->delimiter(',')->capture_default_str();
  be->add_option("--out", ba.out, "CSV output (stdout when omitted)");
  be->add_option("--checkpoint", ba.checkpoint, "model checkpoint (default $DAN_CHECKPOINT)");
  be->add_option("--samples", ba.samples, "rollouts for dan-sample")->capture_default_str();
  be->add_option("--dg", ba.dg, "time step")->capture_default_str();
  be->add_option("--seed", ba.seed, "seed")->capture_default_str();
  be->add_option("--m", ba.m, "agent count for TSPLIB files");
  be->add_option("--workers", ba.workers, "threads for sampling")->capture_default_str();

  PlotArgs pa;
  auto* pl = app.add_subcommand("plot", "render a solution as SVG");
  pl->add_option("--instance", pa.instance, "instance file")->required();
  pl->add_option("--solution", pa.solution, "solution file from `dan solve`")->required();
  pl->add_option("--out", pa.out, "SVG output (stdout when omitted)");
  pl->add_option("--m", pa.m, "agent count for TSPLIB input");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  try {
    if (*gen) return cmd_generate(ga, out);
    if (*sol) return cmd_solve(sa, out);
    if (*tr) return cmd_train(ta, out, err);
    if (*be) return cmd_bench(ba, out);
    if (*pl) return cmd_plot(pa, out);
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace dan
