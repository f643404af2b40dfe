#pragma once

#include <Eigen/Dense>

namespace pwacert {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Absolute tolerance for geometric predicates; all benchmark domains are
// O(1)-scaled so no relative scaling is applied.
inline constexpr double kGeomTol = 1e-9;

// Minimum Chebyshev radius for a cell to count as full-dimensional.
inline constexpr double kFullDimTol = 1e-7;

// LP slacks below this are treated as zero.
inline constexpr double kSlackTol = 1e-6;

}  // namespace pwacert
