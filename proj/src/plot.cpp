#include "dan/plot.hpp"

#include <cstdio>
#include <string>

namespace dan {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
constexpr int kPaletteSize = sizeof(kPalette) / sizeof(kPalette[0]);
constexpr double kMargin = 20.0;

std::string fmt(const char* pattern, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

}  // namespace

std::string render_svg(const MtspInstance& inst, const Solution& sol) {
  require_valid(inst, sol);
  const double span = kPlotSize - 2.0 * kMargin;
  auto px = [&](const Point& p) { return kMargin + p.x * span; };
  auto py = [&](const Point& p) { return kPlotSize - kMargin - p.y * span; };

  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += fmt("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" viewBox=\"0 0 %d %d\">\n",
             kPlotSize, kPlotSize, kPlotSize, kPlotSize);
  svg += fmt("<rect x=\"0\" y=\"0\" width=\"%d\" height=\"%d\" fill=\"white\"/>\n", kPlotSize, kPlotSize);

  for (std::size_t t = 0; t < sol.tours.size(); ++t) {
    std::string points;
    for (int c : sol.tours[t]) {
      if (!points.empty()) points += ' ';
      points += fmt("%.2f,%.2f", px(inst.coords[c]), py(inst.coords[c]));
    }
    svg += fmt("<polyline class=\"tour\" data-agent=\"%zu\" fill=\"none\" stroke=\"%s\" stroke-width=\"2\" points=\"",
               t, kPalette[t % kPaletteSize]);
    svg += points + "\"/>\n";
  }
  for (int c = 1; c < inst.n(); ++c) {
    svg += fmt("<circle cx=\"%.2f\" cy=\"%.2f\" r=\"3\" fill=\"black\"/>\n", px(inst.coords[c]), py(inst.coords[c]));
  }
  const Point& depot = inst.coords[0];
  svg += fmt("<rect class=\"depot\" x=\"%.2f\" y=\"%.2f\" width=\"12\" height=\"12\" fill=\"red\" stroke=\"black\"/>\n",
             px(depot) - 6.0, py(depot) - 6.0);

  svg += "<g class=\"legend\" font-family=\"monospace\" font-size=\"12\">\n";
  double y = 16.0;
  for (std::size_t t = 0; t < sol.tours.size(); ++t, y += 14.0) {
    svg += fmt("<text x=\"8\" y=\"%.0f\" fill=\"%s\">agent %zu: %.4f</text>\n", y, kPalette[t % kPaletteSize], t,
               sol.lengths[t] * inst.scale);
  }
  svg += fmt("<text x=\"8\" y=\"%.0f\" fill=\"black\">max: %.4f</text>\n", y, sol.minmax * inst.scale);
  svg += "</g>\n</svg>\n";
  return svg;
}

}  // namespace dan
