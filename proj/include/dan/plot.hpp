#pragma once

#include <string>

#include "dan/instance.hpp"

namespace dan {

inline constexpr int kPlotSize = 800;

// Static SVG of a solution: unit square on an 800x800 canvas, depot as a
// square marker, one closed polyline per agent, legend with tour lengths
// and the minmax. Throws ValidationError if `sol` does not fit `inst`.
std::string render_svg(const MtspInstance& inst, const Solution& sol);

}  // namespace dan
