#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "dan/env.hpp"
#include "dan/instance.hpp"

namespace dan {

enum class BaselineKind { kRandomPolicy, kNearestNeighbor, kNearestNeighbor2Opt };

std::string to_string(BaselineKind kind);
std::optional<BaselineKind> baseline_from_string(const std::string& name);

// Uniform over the legal actions at every decision.
Solution random_solve(const MtspInstance& inst, double dg, std::uint64_t seed);

// Each deciding agent takes the nearest unvisited city, or the depot once
// none remain. Ties go to the lowest index.
Solution nn_solve(const MtspInstance& inst, double dg);

inline constexpr int kDefaultTwoOptPasses = 50;

// First-improvement 2-opt inside each tour until no segment reversal
// shortens it or `max_passes` sweeps have run. Throws ValidationError on an
// invalid input solution.
Solution two_opt_improve(const MtspInstance& inst, const Solution& sol, int max_passes = kDefaultTwoOptPasses);

Solution solve_baseline(BaselineKind kind, const MtspInstance& inst, double dg, std::uint64_t seed);

}  // namespace dan
