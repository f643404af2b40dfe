#pragma once

#include <optional>
#include <vector>

#include "pwacert/common.hpp"

namespace pwacert::geo {

// Bounded convex region in H-rep, E x + e >= 0 componentwise, with an
// optional cached vertex list. Rows are kept normalized to unit normals.
struct Polytope {
  Mat E;                       // k x n
  Vec e;                       // k
  std::vector<Vec> vertices;   // cached V-rep; empty when not computed
  int dim = 0;

  static Polytope from_halfspaces(Mat E, Vec e);
  static Polytope box(const Vec& lo, const Vec& hi);
  // Convex hull of a point set; fills both representations.
  static Polytope from_vertices(const std::vector<Vec>& pts);

  bool contains(const Vec& x, double tol = kGeomTol) const;
  int num_halfspaces() const { return static_cast<int>(E.rows()); }
};

// Exact vertex set via facet-combination enumeration with feasibility
// filtering; throws "unbounded polytope" when the recession cone is
// nontrivial, returns {} when empty. Result is sorted lexicographically.
std::vector<Vec> vertices_of(const Polytope& p);

// Same enumeration without the recession-cone check; for cells already known
// to live inside a bounded domain.
std::vector<Vec> enumerate_vertices_unchecked(const Polytope& p);

bool is_bounded(const Polytope& p);

// Largest inscribed ball; radius <= 0 means empty or lower-dimensional.
double chebyshev_radius(const Polytope& p, Vec* center = nullptr);

// Supporting-halfspace hull of a point set (brute force over n-subsets).
std::pair<Mat, Vec> hrep_from_vertices(const std::vector<Vec>& pts, int dim);

// Drops halfspaces not tight at any cached vertex plus duplicate rows.
Polytope prune_redundant(Polytope p);

// Exact polygon area (2D only).
double polygon_area(const Polytope& p);
double polygon_area(const std::vector<Vec>& verts);

// Sutherland-Hodgman clip of a convex 2D polygon by {normal.x + offset >= 0}.
std::vector<Vec> clip_polygon(const std::vector<Vec>& poly, const Vec& normal, double offset);

struct VertexRecord {
  Vec point;
  bool on_boundary = false;    // lies on a domain facet
  std::vector<int> cells;      // incident cells, ascending
};

// Cells with pairwise-disjoint interiors covering a bounded domain, plus the
// deduplicated global vertex table.
struct Partition {
  std::vector<Polytope> cells;
  Polytope domain;
  std::vector<int> boundary_cell_ids;
  std::vector<VertexRecord> vertex_table;
  std::vector<std::vector<int>> cell_vertex_ids;

  static Partition build(std::vector<Polytope> cells, Polytope domain);
  // Containing cell with the lowest index, -1 if outside every cell.
  int locate(const Vec& x, double tol = kGeomTol) const;
  int dim() const { return domain.dim; }
};

// Common refinement: all full-dimensional pairwise intersections.
Partition product_partition(const Partition& a, const Partition& b);

struct SplitResult {
  Partition partition;
  std::vector<int> child_ids;  // first child reuses the split cell's id
};

// Replaces one cell by subcells: longest-axis bisection through the
// barycenter, or a star subdivision at the witness when one is given.
SplitResult split_cell(const Partition& p, int cell_id, const std::optional<Vec>& witness);

}  // namespace pwacert::geo
