#pragma once

#include <vector>

#include "pwacert/geometry.hpp"
#include "pwacert/relu.hpp"

namespace pwacert::pwa {

// Per-cell affine map: value = A x + a. Scalar-valued functions (barriers)
// use a single row, gradient() and offset() below.
struct AffinePiece {
  Mat A;
  Vec a;
  Vec gradient() const { return A.row(0).transpose(); }
  double offset() const { return a(0); }
};

// Continuous piecewise-affine function over a partition. Point evaluation
// breaks boundary ties toward the lowest cell index.
struct PwaFunction {
  geo::Partition partition;
  std::vector<AffinePiece> pieces;
  int out_dim = 0;

  int locate(const Vec& x, double tol = kGeomTol) const;  // throws out of domain
  Vec eval(const Vec& x) const;
  double eval_scalar(const Vec& x) const;
  Vec eval_in_cell(const Vec& x, int cell) const { return pieces[cell].A * x + pieces[cell].a; }

  // Largest inter-piece disagreement over shared vertices.
  double continuity_defect() const;
};

// Batch evaluation; the OpenMP path and the serial reference produce bitwise
// identical results (independent rows).
Mat eval_batch(const PwaFunction& f, const Mat& X, bool parallel = true);
Mat eval_batch_serial(const PwaFunction& f, const Mat& X);

// Exact conversion of a ReLU network to a PWA function on the domain:
// breadth-first activation-pattern flipping from the domain center with
// LP feasibility tests; errors with "region explosion" past 50000 regions.
PwaFunction relu_to_pwa(const ReluNetwork& net, const geo::Polytope& domain);

// Splits one cell of the partition, duplicating its affine piece into the
// children (exact for PWA functions).
PwaFunction split_pwa_cell(const PwaFunction& f, int cell_id, const std::optional<Vec>& witness);

}  // namespace pwacert::pwa
