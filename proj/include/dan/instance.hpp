#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace dan {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline double distance(const Point& a, const Point& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

// A MinMax mTSP instance on the complete Euclidean graph. Index 0 is the
// depot; indices 1..n-1 are the cities. Edge weights are computed on demand.
struct MtspInstance {
  std::string name;
  int m = 1;
  // Multiplier from normalized coordinates back to source units.
  double scale = 1.0;
  std::vector<Point> coords;

  int n() const { return static_cast<int>(coords.size()); }
  double cost(int i, int j) const { return distance(coords[i], coords[j]); }
};

// m depot-to-depot tours. lengths[i] is the Euclidean length of tours[i].
struct Solution {
  std::vector<std::vector<int>> tours;
  std::vector<double> lengths;
  double minmax = 0.0;
};

enum class ViolationKind {
  kTourCount,
  kBadEndpoint,
  kIndexOutOfRange,
  kMissingCity,
  kDuplicateCity,
  kLengthMismatch,
  kMinmaxMismatch,
  kVisitCount,
};

struct Violation {
  ViolationKind kind;
  std::string message;
};

// Throws InvalidArgument unless n >= 2 and m >= 1.
MtspInstance generate_instance(int n, int m, std::uint64_t seed);

// Sum of consecutive Euclidean distances along `tour`.
double tour_length(const MtspInstance& inst, std::span<const int> tour);

// Builds a Solution from raw tours, filling lengths and minmax.
Solution make_solution(const MtspInstance& inst, std::vector<std::vector<int>> tours);

// Empty result means the solution is valid.
std::vector<Violation> validate_solution(const MtspInstance& inst, const Solution& sol);

// Throws ValidationError listing every violation when `sol` is invalid.
void require_valid(const MtspInstance& inst, const Solution& sol);

double minmax_cost(const MtspInstance& inst, const Solution& sol);

inline constexpr double kLengthTolerance = 1e-9;

// Exact optimum by enumerating every city-to-agent assignment together with
// every visiting order of each agent's cities. Limited to n <= 10, m <= 3.
std::pair<double, Solution> brute_force_minmax(const MtspInstance& inst);

// Translates the bounding box corner to the origin and scales by
// 1 / max(width, height). `scale` records max(width, height).
MtspInstance normalize(std::span<const Point> coords, int m, std::string name = {});

// TSPLIB subset: EUC_2D with NODE_COORD_SECTION. The agent count is supplied
// by the caller.
MtspInstance parse_tsplib(std::istream& in, int m);
MtspInstance load_tsplib(const std::string& path, int m);

// Interchange document {name, n, m, scale, coords}.
std::string instance_to_json(const MtspInstance& inst);
MtspInstance instance_from_json(const std::string& text);
void write_instance(const std::string& path, const MtspInstance& inst);
// Accepts interchange JSON or, for *.tsp files, TSPLIB text (then m is required).
MtspInstance read_instance(const std::string& path, int m_override = 0);

}  // namespace dan
