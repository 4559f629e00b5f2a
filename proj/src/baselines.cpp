#include "dan/baselines.hpp"

#include <algorithm>
#include <limits>
#include <vector>

#include "dan/random.hpp"

namespace dan {

std::string to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::kRandomPolicy:
      return "random";
    case BaselineKind::kNearestNeighbor:
      return "nn";
    case BaselineKind::kNearestNeighbor2Opt:
      return "nn2opt";
  }
  return "unknown";
}

std::optional<BaselineKind> baseline_from_string(const std::string& name) {
  if (name == "random") return BaselineKind::kRandomPolicy;
  if (name == "nn") return BaselineKind::kNearestNeighbor;
  if (name == "nn2opt") return BaselineKind::kNearestNeighbor2Opt;
  return std::nullopt;
}

Solution random_solve(const MtspInstance& inst, double dg, std::uint64_t seed) {
  Rng rng(seed);
  auto policy = [&rng](const Observation& obs) {
    std::vector<int> legal;
    for (int i = 0; i < obs.n(); ++i) {
      if (!obs.mask[i]) legal.push_back(i);
    }
    return Decision{legal[rng() % legal.size()]};
  };
  return run_episode(inst, policy, dg, false).solution;
}

Solution nn_solve(const MtspInstance& inst, double dg) {
  auto policy = [](const Observation& obs) {
    int best = -1;
    double best_dist = std::numeric_limits<double>::infinity();
    for (int i = 1; i < obs.n(); ++i) {
      if (obs.mask[i]) continue;
      const auto& p = obs.cities_rel[i];
      const double dist = std::sqrt(p.x * p.x + p.y * p.y);
      if (dist < best_dist) {
        best_dist = dist;
        best = i;
      }
    }
    return Decision{best < 0 ? 0 : best};
  };
  return run_episode(inst, policy, dg, false).solution;
}

namespace {

// Returns true if any improving reversal was applied during this sweep.
bool two_opt_pass(const MtspInstance& inst, std::vector<int>& tour) {
  bool improved = false;
  const int size = static_cast<int>(tour.size());
  // Reverse tour[i+1 .. j]; edges (i, i+1) and (j, j+1) become (i, j), (i+1, j+1).
  for (int i = 0; i + 2 < size - 1; ++i) {
    for (int j = i + 2; j + 1 < size; ++j) {
      const int a = tour[i], b = tour[i + 1], c = tour[j], d = tour[j + 1];
      const double delta = inst.cost(a, c) + inst.cost(b, d) - inst.cost(a, b) - inst.cost(c, d);
      if (delta < -1e-12) {
        std::reverse(tour.begin() + i + 1, tour.begin() + j + 1);
        improved = true;
      }
    }
  }
  return improved;
}

}  // namespace

Solution two_opt_improve(const MtspInstance& inst, const Solution& sol, int max_passes) {
  require_valid(inst, sol);
  std::vector<std::vector<int>> tours = sol.tours;
  for (std::size_t t = 0; t < tours.size(); ++t) {
    const double before = tour_length(inst, tours[t]);
    std::vector<int> candidate = tours[t];
    for (int pass = 0; pass < max_passes; ++pass) {
      if (!two_opt_pass(inst, candidate)) break;
    }
    // Accept only a strictly shorter recomputed length.
    if (tour_length(inst, candidate) < before) tours[t] = std::move(candidate);
  }
  return make_solution(inst, std::move(tours));
}

Solution solve_baseline(BaselineKind kind, const MtspInstance& inst, double dg, std::uint64_t seed) {
  switch (kind) {
    case BaselineKind::kRandomPolicy:
      return random_solve(inst, dg, seed);
    case BaselineKind::kNearestNeighbor:
      return nn_solve(inst, dg);
    case BaselineKind::kNearestNeighbor2Opt:
      return two_opt_improve(inst, nn_solve(inst, dg));
  }
  return nn_solve(inst, dg);
}

}  // namespace dan
