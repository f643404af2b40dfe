#pragma once

#include <optional>
#include <vector>

#include "pwacert/synthesis.hpp"

namespace pwacert::uis {

// Two-slope extended class-K function: alpha_max*s for s >= 0, alpha_min*s
// below zero.
struct LeakyAlpha {
  double alpha_min = 0.0;
  double alpha_max = 0.0;
  double operator()(double s) const { return s >= 0.0 ? alpha_max * s : alpha_min * s; }
};

struct UisMember {
  pwa::PwaFunction barrier;  // scalar
  double alpha = 0.0;
  pwa::PwaFunction dynamics;
  synthesis::UncertaintyMap uncertainty;
};

// Max-composition of per-alpha barriers; the zero superlevel set is the
// union of the member sets. Ties in the max break toward the largest member
// index.
struct UisBarrier {
  std::vector<UisMember> members;
  LeakyAlpha alpha_bar;
  geo::Polytope domain;
  std::optional<geo::Partition> product;  // built on demand, single-threaded

  struct Eval {
    double value = 0.0;
    int member = -1;
    int cell = -1;  // cell of the active member's partition
  };
  Eval eval(const Vec& x) const;  // throws out of domain
  double value(const Vec& x) const { return eval(x).value; }
  Vec active_gradient(const Vec& x) const;

  // Common refinement of all member partitions; call before facet queries
  // and before sharing across threads.
  const geo::Partition& ensure_product_partition();

  bool inside(const Vec& x) const { return value(x) >= 0.0; }
};

// Runs synthesis per slope (in parallel), admits certified members only, and
// errors when nothing certifies. The grid must be ascending and positive.
UisBarrier uis_sweep(const pwa::PwaFunction& dyn, const std::vector<double>& alpha_grid,
                     const synthesis::SynthesisConfig& cfg, bool parallel = true);

// Derivative-side residual of the nonsmooth barrier condition at x for a
// given flow vector: s_active . flow + alpha_bar(h(x)).
double barrier_condition_residual(const UisBarrier& b, const Vec& flow, const Vec& x);

// Optional grid generator: center +/- geometric steps, ascending.
std::vector<double> alpha_grid_geometric(double center, int per_side, double factor);

}  // namespace pwacert::uis
