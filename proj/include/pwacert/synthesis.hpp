#pragma once

#include <vector>

#include "pwacert/pwa.hpp"
#include "pwacert/simplex.hpp"

namespace pwacert::synthesis {

struct SynthesisConfig {
  double alpha = 0.05;  // linear class-K slope
  double eps1 = 1e-4;   // boundary negativity margin
  double eps2 = 1e-4;   // interior positivity margin
  double eps3 = 1e-4;   // barrier-condition margin
  int max_refinements = 10;
  double slack_tol = kSlackTol;

  void validate() const;
};

// Per-cell polytopic mismatch set, stored by its vertex list. An empty or
// missing entry means the degenerate set {0}. Entries track cell ids of a
// particular partition; cell splits keep ids stable (children reuse the
// parent slot plus appended ids) so inherit() maps across a split.
struct UncertaintyMap {
  std::vector<std::vector<Vec>> delta_vertices;

  static UncertaintyMap zero(int num_cells) {
    UncertaintyMap u;
    u.delta_vertices.resize(num_cells);
    return u;
  }
  std::vector<Vec> vertices_for(int cell, int dim) const;
  bool is_trivial(int cell) const;
  UncertaintyMap inherit(const std::vector<int>& child_ids, int new_size) const;

  // Componentwise box {|d| <= bound} as a vertex list (zero components collapse).
  static std::vector<Vec> box_vertices(const Vec& bound);
  // Segment conv{+e, -e}; kept for comparison in tests.
  static std::vector<Vec> segment_vertices(const Vec& e);
};

struct LpLayout {
  // variable columns
  std::vector<int> s_col;      // per cell, first of n gradient vars
  std::vector<int> t_col;      // per cell
  std::vector<int> taub_col;   // per global vertex, -1 where interior
  std::vector<int> tauint_col; // per global vertex, -1 where boundary
  // one record per barrier-condition row, for post-hoc checks
  struct FlowRow {
    int cell;
    int vertex;
    int delta_index;
  };
  std::vector<FlowRow> flow_rows;
};

struct LpBuild {
  lp::Problem problem;
  LpLayout layout;
};

// Assembles the robust barrier LP on the dynamics' own partition: boundary
// negativity and interior positivity with per-vertex slacks, the barrier
// condition at every cell-vertex incidence and uncertainty vertex, and
// continuity ties at shared vertices.
LpBuild build_lp(const pwa::PwaFunction& dyn, const SynthesisConfig& cfg,
                 const UncertaintyMap& unc);

struct LpStats {
  int iterations = 0;
  double solve_seconds = 0.0;
  int rows = 0;
  int cols = 0;
  int refinements = 0;
  int infeasible_retries = 0;
};

struct SynthesisResult {
  pwa::PwaFunction barrier;    // scalar pieces (s_i, t_i) on the final partition
  pwa::PwaFunction dynamics;   // dynamics refined alongside the barrier
  UncertaintyMap uncertainty;  // re-aligned to the final partition
  Vec slack_boundary;          // per global vertex of the final partition
  Vec slack_interior;
  bool certified = false;      // boundary slacks all zero (Remark-1 sense)
  double objective = 0.0;
  LpStats stats;
  double alpha = 0.0;
};

// Solves the LP, splitting cells incident to nonzero slacks and re-solving
// until slacks vanish or the refinement budget runs out. A certified=false
// result (not an error) reports budget exhaustion with boundary slack left.
SynthesisResult synthesize(const pwa::PwaFunction& dyn, const SynthesisConfig& cfg,
                           const UncertaintyMap& unc);

}  // namespace pwacert::synthesis
