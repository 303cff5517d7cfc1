#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "rgd/types.hpp"

namespace rgd {

// Static SVG emission for the two result displays: a 2-d design-space scatter
// over oracle level sets, and guidance-strength trajectories across steps.

struct ScatterGroup {
  std::string label;
  std::string color;
  std::vector<std::pair<double, double>> points;
};

// Contours of `field` on [lo, hi]^2 at the given levels (marching squares),
// plus the scatter groups. Writes a standalone SVG 1.1 document.
void write_design_scatter_svg(const std::filesystem::path& path,
                              const std::function<double(double, double)>& field, double lo,
                              double hi, const std::vector<double>& levels,
                              const std::vector<ScatterGroup>& groups);

// One polyline per row of `ratios` (step index vs value), plus their mean.
void write_trajectory_svg(const std::filesystem::path& path, const MatrixXd& ratios,
                          const std::string& y_label);

}  // namespace rgd
