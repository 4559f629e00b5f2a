#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dan/instance.hpp"
#include "dan/model.hpp"

namespace dan {

// Solver ids accepted by the CLI.
inline const std::vector<std::string> kSolverIds = {"dan-greedy", "dan-sample", "random", "nn", "nn2opt"};
bool is_dan_solver(const std::string& id);

struct SolveOutcome {
  Solution solution;
  std::vector<double> sample_costs;
  double wall_ms = 0.0;  // solving only
};

// Throws InvalidArgument for unknown ids or a dan-* solver without params.
SolveOutcome run_solver(const std::string& solver, const MtspInstance& inst, const DanParameters* params, int samples,
                        double dg, std::uint64_t seed, int workers = 1);

struct BenchRow {
  std::string instance;
  int n = 0;
  int m = 0;
  std::string solver;
  int samples = 1;
  std::uint64_t seed = 0;
  double minmax = 0.0;  // source units
  double seconds = 0.0;
  bool failed = false;
  std::string error;
};

struct BenchOptions {
  std::vector<std::string> solvers;
  const DanParameters* params = nullptr;
  int samples = 64;
  double dg = kEvalDg;
  std::uint64_t seed = 0;
  int workers = 1;
};

// Rows in instance order, then solver order. A solver that throws yields a
// failed row; the others still run.
std::vector<BenchRow> run_bench(const std::vector<MtspInstance>& instances, const BenchOptions& opts);

// Header: instance,n,m,solver,samples,seed,minmax,seconds
void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows);
// Per-solver mean Max. and T(s).
std::string format_bench_table(const std::vector<BenchRow>& rows);

std::string solution_to_json(const MtspInstance& inst, const std::string& solver, std::uint64_t seed,
                             const Solution& sol, double wall_ms);
// Reads tours from a solution file and recomputes lengths against `inst`.
Solution solution_from_json(const MtspInstance& inst, const std::string& text);

}  // namespace dan
