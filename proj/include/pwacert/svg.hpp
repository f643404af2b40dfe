#pragma once

#include <functional>
#include <string>
#include <vector>

#include "pwacert/common.hpp"

namespace pwacert::svg {

using Segment = std::pair<Vec, Vec>;

// Zero-level segments of a scalar field on a regular grid over the bounding
// box [lo, hi] (marching squares with linear interpolation). Grid cells whose
// corners are all out-of-field (NaN) are skipped.
std::vector<Segment> marching_squares(const std::function<double(const Vec&)>& field,
                                      const Vec& lo, const Vec& hi, int resolution);

struct LevelSetLayer {
  std::vector<Segment> segments;
  std::string color = "#000000";
  double stroke_width = 1.0;
  std::string label;
};

void write_svg(const std::string& path, const std::vector<LevelSetLayer>& layers, const Vec& lo,
               const Vec& hi, int pixels = 640);

}  // namespace pwacert::svg
