#include "dan/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "dan/baselines.hpp"
#include "dan/errors.hpp"

namespace dan {

bool is_dan_solver(const std::string& id) { return id.rfind("dan-", 0) == 0; }

SolveOutcome run_solver(const std::string& solver, const MtspInstance& inst, const DanParameters* params, int samples,
                        double dg, std::uint64_t seed, int workers) {
  if (std::find(kSolverIds.begin(), kSolverIds.end(), solver) == kSolverIds.end()) {
    throw InvalidArgument("unknown solver '" + solver + "'");
  }
  if (is_dan_solver(solver) && params == nullptr) throw InvalidArgument(solver + " needs a checkpoint");

  SolveOutcome out;
  const auto start = std::chrono::steady_clock::now();
  if (solver == "dan-greedy") {
    auto r = solve(inst, *params, SolveMode::greedy(), dg, seed, params->config.clip_c_eval, workers);
    out.solution = std::move(r.solution);
    out.sample_costs = std::move(r.sample_costs);
  } else if (solver == "dan-sample") {
    auto r = solve(inst, *params, SolveMode::sample(samples), dg, seed, params->config.clip_c_eval, workers);
    out.solution = std::move(r.solution);
    out.sample_costs = std::move(r.sample_costs);
  } else {
    out.solution = solve_baseline(*baseline_from_string(solver), inst, dg, seed);
    out.sample_costs = {out.solution.minmax};
  }
  out.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  require_valid(inst, out.solution);
  return out;
}

std::vector<BenchRow> run_bench(const std::vector<MtspInstance>& instances, const BenchOptions& opts) {
  std::vector<BenchRow> rows;
  for (const auto& inst : instances) {
    for (const auto& solver : opts.solvers) {
      BenchRow row;
      row.instance = inst.name;
      row.n = inst.n();
      row.m = inst.m;
      row.solver = solver;
      row.samples = solver == "dan-sample" ? opts.samples : 1;
      row.seed = opts.seed;
      try {
        const auto out = run_solver(solver, inst, opts.params, opts.samples, opts.dg, opts.seed, opts.workers);
        row.minmax = out.solution.minmax * inst.scale;
        row.seconds = out.wall_ms / 1000.0;
      } catch (const std::exception& e) {
        row.failed = true;
        row.error = e.what();
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
  out << "instance,n,m,solver,samples,seed,minmax,seconds\n";
  char buf[64];
  for (const auto& r : rows) {
    out << r.instance << ',' << r.n << ',' << r.m << ',' << r.solver << ',' << r.samples << ',' << r.seed << ',';
    if (r.failed) {
      out << "failed,failed\n";
      continue;
    }
    std::snprintf(buf, sizeof buf, "%.10g,%.6f", r.minmax, r.seconds);
    out << buf << '\n';
  }
}

std::string format_bench_table(const std::vector<BenchRow>& rows) {
  struct Acc {
    double cost = 0.0, seconds = 0.0;
    int ok = 0, failed = 0;
  };
  std::vector<std::string> order;
  std::map<std::string, Acc> acc;
  for (const auto& r : rows) {
    if (!acc.count(r.solver)) order.push_back(r.solver);
    auto& a = acc[r.solver];
    if (r.failed) {
      ++a.failed;
      continue;
    }
    a.cost += r.minmax;
    a.seconds += r.seconds;
    ++a.ok;
  }
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-12s %12s %10s %6s %6s\n", "Method", "Max.", "T(s)", "ok", "failed");
  out << buf;
  for (const auto& s : order) {
    const auto& a = acc[s];
    if (a.ok == 0) {
      std::snprintf(buf, sizeof buf, "%-12s %12s %10s %6d %6d\n", s.c_str(), "-", "-", a.ok, a.failed);
    } else {
      std::snprintf(buf, sizeof buf, "%-12s %12.4f %10.4f %6d %6d\n", s.c_str(), a.cost / a.ok, a.seconds / a.ok, a.ok,
                    a.failed);
    }
    out << buf;
  }
  return out.str();
}

std::string solution_to_json(const MtspInstance& inst, const std::string& solver, std::uint64_t seed,
                             const Solution& sol, double wall_ms) {
  nlohmann::json j = {{"instance", inst.name},
                      {"solver", solver},
                      {"seed", seed},
                      {"tours", sol.tours},
                      {"lengths", sol.lengths},
                      {"minmax_normalized", sol.minmax},
                      {"minmax_source_units", sol.minmax * inst.scale},
                      {"wall_ms", wall_ms}};
  return j.dump(2) + "\n";
}

Solution solution_from_json(const MtspInstance& inst, const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    return make_solution(inst, j.at("tours").get<std::vector<std::vector<int>>>());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(0, std::string("solution JSON: ") + e.what());
  }
}

}  // namespace dan
