#include "dan/instance.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <sstream>

#include "dan/errors.hpp"
#include "dan/random.hpp"

namespace dan {

MtspInstance generate_instance(int n, int m, std::uint64_t seed) {
  if (n < 2) throw InvalidArgument("generate_instance: n must be >= 2, got " + std::to_string(n));
  if (m < 1) throw InvalidArgument("generate_instance: m must be >= 1, got " + std::to_string(m));
  Rng rng(seed);
  MtspInstance inst;
  inst.m = m;
  inst.scale = 1.0;
  inst.coords.resize(n);
  for (auto& p : inst.coords) {
    p.x = uniform01(rng);
    p.y = uniform01(rng);
  }
  return inst;
}

double tour_length(const MtspInstance& inst, std::span<const int> tour) {
  for (int idx : tour) {
    if (idx < 0 || idx >= inst.n()) {
      throw InvalidArgument("tour_length: index " + std::to_string(idx) + " out of range [0, " +
                            std::to_string(inst.n()) + ")");
    }
  }
  double total = 0.0;
  for (std::size_t j = 1; j < tour.size(); ++j) total += inst.cost(tour[j - 1], tour[j]);
  return total;
}

Solution make_solution(const MtspInstance& inst, std::vector<std::vector<int>> tours) {
  Solution sol;
  sol.tours = std::move(tours);
  sol.lengths.reserve(sol.tours.size());
  for (const auto& t : sol.tours) sol.lengths.push_back(tour_length(inst, t));
  sol.minmax = sol.lengths.empty() ? 0.0 : *std::max_element(sol.lengths.begin(), sol.lengths.end());
  return sol;
}

std::vector<Violation> validate_solution(const MtspInstance& inst, const Solution& sol) {
  std::vector<Violation> out;
  const int n = inst.n();
  auto report = [&](ViolationKind kind, std::string msg) { out.push_back({kind, std::move(msg)}); };

  if (static_cast<int>(sol.tours.size()) != inst.m) {
    report(ViolationKind::kTourCount, "expected " + std::to_string(inst.m) + " tours, got " +
                                          std::to_string(sol.tours.size()));
  }
  if (sol.lengths.size() != sol.tours.size()) {
    report(ViolationKind::kLengthMismatch, "lengths has " + std::to_string(sol.lengths.size()) +
                                               " entries for " + std::to_string(sol.tours.size()) +
                                               " tours");
  }

  std::vector<int> seen(n, 0);
  std::size_t visits = 0;
  bool indices_ok = true;
  for (std::size_t i = 0; i < sol.tours.size(); ++i) {
    const auto& tour = sol.tours[i];
    visits += tour.size();
    if (tour.size() < 2 || tour.front() != 0 || tour.back() != 0) {
      report(ViolationKind::kBadEndpoint, "tour " + std::to_string(i) + " does not start and end at the depot");
    }
    for (std::size_t j = 0; j < tour.size(); ++j) {
      const int c = tour[j];
      if (c < 0 || c >= n) {
        report(ViolationKind::kIndexOutOfRange, "tour " + std::to_string(i) + " has index " + std::to_string(c));
        indices_ok = false;
        continue;
      }
      if (c == 0) {
        if (j != 0 && j + 1 != tour.size()) {
          report(ViolationKind::kBadEndpoint, "tour " + std::to_string(i) + " passes the depot mid-tour");
        }
        continue;
      }
      if (++seen[c] == 2) report(ViolationKind::kDuplicateCity, "city " + std::to_string(c) + " visited more than once");
    }
  }
  for (int c = 1; c < n; ++c) {
    if (seen[c] == 0) report(ViolationKind::kMissingCity, "city " + std::to_string(c) + " never visited");
  }
  const std::size_t expected_visits = static_cast<std::size_t>(n + 2 * inst.m - 1);
  if (visits != expected_visits) {
    report(ViolationKind::kVisitCount, "sum of tour sizes is " + std::to_string(visits) + ", expected n + 2m - 1 = " +
                                           std::to_string(expected_visits));
  }

  if (indices_ok && sol.lengths.size() == sol.tours.size()) {
    double worst = 0.0;
    for (std::size_t i = 0; i < sol.tours.size(); ++i) {
      const double len = tour_length(inst, sol.tours[i]);
      worst = std::max(worst, len);
      if (std::abs(len - sol.lengths[i]) > kLengthTolerance) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "tour " << i << " stored length " << sol.lengths[i] << " != recomputed " << len;
        report(ViolationKind::kLengthMismatch, msg.str());
      }
    }
    const double stored_max =
        sol.lengths.empty() ? 0.0 : *std::max_element(sol.lengths.begin(), sol.lengths.end());
    if (sol.minmax != stored_max) {
      report(ViolationKind::kMinmaxMismatch, "minmax is not the maximum of the tour lengths");
    }
  }
  return out;
}

void require_valid(const MtspInstance& inst, const Solution& sol) {
  const auto violations = validate_solution(inst, sol);
  if (violations.empty()) return;
  std::string msg = "invalid solution:";
  for (const auto& v : violations) msg += "\n  " + v.message;
  throw ValidationError(msg);
}

double minmax_cost(const MtspInstance& inst, const Solution& sol) {
  require_valid(inst, sol);
  return sol.minmax;
}

namespace {

// Optimal closed tour through the depot and the cities of one subset, by
// trying every visiting order.
struct SubsetTour {
  double length = 0.0;
  std::vector<int> order;
};

SubsetTour best_subset_tour(const MtspInstance& inst, std::vector<int> cities) {
  SubsetTour best{std::numeric_limits<double>::infinity(), {}};
  std::sort(cities.begin(), cities.end());
  do {
    double len = 0.0;
    int prev = 0;
    for (int c : cities) {
      len += inst.cost(prev, c);
      prev = c;
    }
    len += inst.cost(prev, 0);
    if (len < best.length) {
      best.length = len;
      best.order = cities;
    }
  } while (std::next_permutation(cities.begin(), cities.end()));
  return best;
}

}  // namespace

std::pair<double, Solution> brute_force_minmax(const MtspInstance& inst) {
  const int n = inst.n();
  const int m = inst.m;
  if (n > 10 || m > 3) {
    throw TooLarge("brute_force_minmax: limited to n <= 10 and m <= 3, got n=" + std::to_string(n) +
                   ", m=" + std::to_string(m));
  }
  if (n < 2 || m < 1) throw InvalidArgument("brute_force_minmax: need n >= 2 and m >= 1");

  const int k = n - 1;
  const std::uint32_t subsets = 1u << k;
  std::vector<SubsetTour> table(subsets);
  for (std::uint32_t mask = 0; mask < subsets; ++mask) {
    std::vector<int> cities;
    for (int b = 0; b < k; ++b) {
      if (mask & (1u << b)) cities.push_back(b + 1);
    }
    table[mask] = best_subset_tour(inst, std::move(cities));
  }

  // Every assignment of the k cities to m agents, as base-m digits.
  std::uint64_t assignments = 1;
  for (int i = 0; i < k; ++i) assignments *= static_cast<std::uint64_t>(m);

  double best = std::numeric_limits<double>::infinity();
  std::vector<std::uint32_t> best_masks(m, 0);
  std::vector<std::uint32_t> masks(m);
  for (std::uint64_t code = 0; code < assignments; ++code) {
    std::fill(masks.begin(), masks.end(), 0u);
    std::uint64_t rest = code;
    for (int b = 0; b < k; ++b) {
      masks[rest % m] |= 1u << b;
      rest /= m;
    }
    double worst = 0.0;
    for (int a = 0; a < m && worst < best; ++a) worst = std::max(worst, table[masks[a]].length);
    if (worst < best) {
      best = worst;
      best_masks = masks;
    }
  }

  std::vector<std::vector<int>> tours;
  for (int a = 0; a < m; ++a) {
    std::vector<int> tour{0};
    const auto& order = table[best_masks[a]].order;
    tour.insert(tour.end(), order.begin(), order.end());
    tour.push_back(0);
    tours.push_back(std::move(tour));
  }
  Solution sol = make_solution(inst, std::move(tours));
  return {sol.minmax, std::move(sol)};
}

MtspInstance normalize(std::span<const Point> coords, int m, std::string name) {
  if (coords.size() < 2) throw InvalidArgument("normalize: need at least 2 points");
  if (m < 1) throw InvalidArgument("normalize: m must be >= 1");
  double min_x = coords[0].x, max_x = coords[0].x;
  double min_y = coords[0].y, max_y = coords[0].y;
  for (const auto& p : coords) {
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }
  const double extent = std::max(max_x - min_x, max_y - min_y);
  if (!(extent > 0.0)) throw DegenerateInstance("normalize: all points coincide");

  MtspInstance inst;
  inst.name = std::move(name);
  inst.m = m;
  inst.scale = extent;
  inst.coords.reserve(coords.size());
  for (const auto& p : coords) {
    // Clamp guards the last-ulp overshoot of (max - min) / extent.
    inst.coords.push_back({std::clamp((p.x - min_x) / extent, 0.0, 1.0),
                           std::clamp((p.y - min_y) / extent, 0.0, 1.0)});
  }
  return inst;
}

}  // namespace dan
