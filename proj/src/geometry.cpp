#include "pwacert/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "pwacert/simplex.hpp"

namespace pwacert::geo {

namespace {

bool lex_less(const Vec& a, const Vec& b) {
  for (int i = 0; i < a.size(); ++i) {
    if (a(i) < b(i)) return true;
    if (a(i) > b(i)) return false;
  }
  return false;
}

void sort_lex(std::vector<Vec>& pts) { std::sort(pts.begin(), pts.end(), lex_less); }

// Iterates all size-k subsets of [0, n).
class Combinations {
 public:
  Combinations(int n, int k) : n_(n), k_(k), idx_(k) {
    for (int i = 0; i < k; ++i) idx_[i] = i;
    done_ = k > n;
  }
  bool done() const { return done_; }
  const std::vector<int>& current() const { return idx_; }
  void next() {
    int i = k_ - 1;
    while (i >= 0 && idx_[i] == n_ - k_ + i) --i;
    if (i < 0) {
      done_ = true;
      return;
    }
    ++idx_[i];
    for (int j = i + 1; j < k_; ++j) idx_[j] = idx_[j - 1] + 1;
  }

 private:
  int n_, k_;
  std::vector<int> idx_;
  bool done_ = false;
};

// Grid-bucketed point dedup at kGeomTol.
class PointDeduper {
 public:
  explicit PointDeduper(int dim) : dim_(dim) {}

  // Returns the id of the matching stored point, inserting if new.
  int insert(const Vec& p, bool* was_new) {
    auto key = bucket(p);
    // check the 3^d neighborhood
    std::vector<long long> offs(dim_, -1);
    while (true) {
      auto k = key;
      for (int i = 0; i < dim_; ++i) k[i] += offs[i];
      auto it = buckets_.find(k);
      if (it != buckets_.end()) {
        for (int id : it->second) {
          if ((points_[id] - p).lpNorm<Eigen::Infinity>() <= kGeomTol) {
            if (was_new) *was_new = false;
            return id;
          }
        }
      }
      int i = 0;
      while (i < dim_ && offs[i] == 1) offs[i++] = -1;
      if (i == dim_) break;
      ++offs[i];
    }
    int id = static_cast<int>(points_.size());
    points_.push_back(p);
    buckets_[key].push_back(id);
    if (was_new) *was_new = true;
    return id;
  }

  const std::vector<Vec>& points() const { return points_; }

 private:
  std::vector<long long> bucket(const Vec& p) const {
    std::vector<long long> k(dim_);
    for (int i = 0; i < dim_; ++i) k[i] = static_cast<long long>(std::floor(p(i) / kBucket));
    return k;
  }
  static constexpr double kBucket = 1e-6;
  int dim_;
  std::vector<Vec> points_;
  std::map<std::vector<long long>, std::vector<int>> buckets_;
};

}  // namespace

Polytope Polytope::from_halfspaces(Mat E, Vec e) {
  Polytope p;
  p.dim = static_cast<int>(E.cols());
  // Normalize rows; drop trivially satisfied ones, keep infeasible markers.
  std::vector<int> keep;
  for (int i = 0; i < E.rows(); ++i) {
    double nrm = E.row(i).norm();
    if (nrm < 1e-14) {
      if (e(i) < -1e-14) keep.push_back(i);  // 0 >= -e(i) impossible: empty set marker
      continue;
    }
    E.row(i) /= nrm;
    e(i) /= nrm;
    keep.push_back(i);
  }
  p.E.resize(static_cast<int>(keep.size()), p.dim);
  p.e.resize(static_cast<int>(keep.size()));
  for (size_t r = 0; r < keep.size(); ++r) {
    p.E.row(static_cast<int>(r)) = E.row(keep[r]);
    p.e(static_cast<int>(r)) = e(keep[r]);
  }
  return p;
}

Polytope Polytope::box(const Vec& lo, const Vec& hi) {
  int n = static_cast<int>(lo.size());
  Mat E(2 * n, n);
  Vec e(2 * n);
  E.setZero();
  for (int i = 0; i < n; ++i) {
    E(2 * i, i) = 1.0;
    e(2 * i) = -lo(i);  // x_i - lo >= 0
    E(2 * i + 1, i) = -1.0;
    e(2 * i + 1) = hi(i);  // hi - x_i >= 0
  }
  Polytope p = from_halfspaces(std::move(E), std::move(e));
  return p;
}

Polytope Polytope::from_vertices(const std::vector<Vec>& pts) {
  if (pts.empty()) throw std::invalid_argument("from_vertices: empty point set");
  int n = static_cast<int>(pts[0].size());
  auto [E, e] = hrep_from_vertices(pts, n);
  Polytope p = from_halfspaces(std::move(E), std::move(e));
  p.vertices = enumerate_vertices_unchecked(p);
  return p;
}

bool Polytope::contains(const Vec& x, double tol) const {
  return ((E * x + e).array() >= -tol).all();
}

std::vector<Vec> enumerate_vertices_unchecked(const Polytope& p) {
  const int n = p.dim;
  const int k = p.num_halfspaces();
  std::vector<Vec> out;
  if (k < n) return out;
  PointDeduper dedup(n);
  Mat A(n, n);
  Vec b(n);
  for (Combinations c(k, n); !c.done(); c.next()) {
    const auto& idx = c.current();
    for (int i = 0; i < n; ++i) {
      A.row(i) = p.E.row(idx[i]);
      b(i) = -p.e(idx[i]);
    }
    Eigen::FullPivLU<Mat> lu(A);
    lu.setThreshold(1e-9);
    if (!lu.isInvertible()) continue;
    Vec x = lu.solve(b);
    if (!x.allFinite()) continue;
    if (p.contains(x, kGeomTol)) {
      bool was_new = false;
      dedup.insert(x, &was_new);
      (void)was_new;
    }
  }
  out = dedup.points();
  sort_lex(out);
  return out;
}

bool is_bounded(const Polytope& p) {
  // Bounded iff the recession cone {d : E d >= 0} is trivial; probe each
  // signed axis over the unit box.
  const int n = p.dim;
  for (int axis = 0; axis < n; ++axis) {
    for (double sgn : {1.0, -1.0}) {
      lp::Problem prob;
      for (int i = 0; i < n; ++i) prob.add_var(i == axis ? -sgn : 0.0, false);
      for (int r = 0; r < p.num_halfspaces(); ++r) {
        std::vector<std::pair<int, double>> terms;
        for (int i = 0; i < n; ++i)
          if (p.E(r, i) != 0.0) terms.push_back({i, p.E(r, i)});
        prob.add_row(std::move(terms), lp::RowSense::kGe, 0.0);
      }
      for (int i = 0; i < n; ++i) {
        prob.add_row({{i, 1.0}}, lp::RowSense::kLe, 1.0);
        prob.add_row({{i, 1.0}}, lp::RowSense::kGe, -1.0);
      }
      auto sol = lp::solve(prob);
      if (sol.status != lp::Status::kOptimal) return false;
      if (-sol.objective > 1e-7) return false;
    }
  }
  return true;
}

std::vector<Vec> vertices_of(const Polytope& p) {
  if (!p.vertices.empty()) return p.vertices;
  if (!is_bounded(p)) throw std::runtime_error("unbounded polytope");
  return enumerate_vertices_unchecked(p);
}

double chebyshev_radius(const Polytope& p, Vec* center) {
  const int n = p.dim;
  lp::Problem prob;
  for (int i = 0; i < n; ++i) prob.add_var(0.0, false);
  int rvar = prob.add_var(-1.0, true);  // maximize r
  for (int r = 0; r < p.num_halfspaces(); ++r) {
    std::vector<std::pair<int, double>> terms;
    for (int i = 0; i < n; ++i)
      if (p.E(r, i) != 0.0) terms.push_back({i, p.E(r, i)});
    terms.push_back({rvar, -1.0});  // rows are unit-normalized
    prob.add_row(std::move(terms), lp::RowSense::kGe, -p.e(r));
  }
  prob.add_row({{rvar, 1.0}}, lp::RowSense::kLe, 1e6);
  auto sol = lp::solve(prob);
  if (sol.status != lp::Status::kOptimal) return -1.0;
  if (center) *center = sol.x.head(n);
  return sol.x(rvar);
}

std::pair<Mat, Vec> hrep_from_vertices(const std::vector<Vec>& pts, int dim) {
  const int n = dim;
  const int v = static_cast<int>(pts.size());
  if (v < n + 1) throw std::invalid_argument("hrep_from_vertices: too few points");
  if (n == 1) {
    double lo = pts[0](0), hi = pts[0](0);
    for (const auto& q : pts) {
      lo = std::min(lo, q(0));
      hi = std::max(hi, q(0));
    }
    Mat E(2, 1);
    Vec e(2);
    E << 1.0, -1.0;
    e << -lo, hi;
    return {E, e};
  }
  std::vector<Vec> normals;
  std::vector<double> offsets;
  auto have_row = [&](const Vec& a, double b) {
    for (size_t i = 0; i < normals.size(); ++i)
      if ((normals[i] - a).lpNorm<Eigen::Infinity>() <= 1e-9 && std::abs(offsets[i] - b) <= 1e-9)
        return true;
    return false;
  };
  Mat diff(n - 1 >= 0 ? n - 1 : 0, n);
  for (Combinations c(v, n); !c.done(); c.next()) {
    const auto& idx = c.current();
    for (int i = 1; i < n; ++i) diff.row(i - 1) = (pts[idx[i]] - pts[idx[0]]).transpose();
    // normal spans the null space of the difference matrix
    Eigen::JacobiSVD<Mat> svd(diff, Eigen::ComputeFullV);
    if (n > 1 && svd.rank() < n - 1) continue;  // degenerate subset
    Vec a = svd.matrixV().col(n - 1);
    double b = -a.dot(pts[idx[0]]);
    // supporting iff all points on one side
    double lo = 0.0, hi = 0.0;
    for (const auto& q : pts) {
      double s = a.dot(q) + b;
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
    if (lo >= -1e-9) {
      if (!have_row(a, b)) {
        normals.push_back(a);
        offsets.push_back(b);
      }
    } else if (hi <= 1e-9) {
      if (!have_row(-a, -b)) {
        normals.push_back(-a);
        offsets.push_back(-b);
      }
    }
  }
  Mat E(static_cast<int>(normals.size()), n);
  Vec e(static_cast<int>(normals.size()));
  for (size_t i = 0; i < normals.size(); ++i) {
    E.row(static_cast<int>(i)) = normals[i].transpose();
    e(static_cast<int>(i)) = offsets[i];
  }
  return {E, e};
}

Polytope prune_redundant(Polytope p) {
  if (p.vertices.empty()) p.vertices = enumerate_vertices_unchecked(p);
  std::vector<int> keep;
  for (int r = 0; r < p.num_halfspaces(); ++r) {
    bool tight = false;
    for (const auto& v : p.vertices)
      if (std::abs(p.E.row(r).dot(v) + p.e(r)) <= 1e-7) {
        tight = true;
        break;
      }
    if (!tight) continue;
    bool dup = false;
    for (int s : keep)
      if ((p.E.row(r) - p.E.row(s)).norm() <= 1e-9 && std::abs(p.e(r) - p.e(s)) <= 1e-9) {
        dup = true;
        break;
      }
    if (!dup) keep.push_back(r);
  }
  Mat E(static_cast<int>(keep.size()), p.dim);
  Vec e(static_cast<int>(keep.size()));
  for (size_t i = 0; i < keep.size(); ++i) {
    E.row(static_cast<int>(i)) = p.E.row(keep[i]);
    e(static_cast<int>(i)) = p.e(keep[i]);
  }
  p.E = std::move(E);
  p.e = std::move(e);
  return p;
}

double polygon_area(const std::vector<Vec>& verts) {
  if (verts.size() < 3) return 0.0;
  Vec c = Vec::Zero(2);
  for (const auto& v : verts) c += v;
  c /= static_cast<double>(verts.size());
  std::vector<Vec> ordered = verts;
  std::sort(ordered.begin(), ordered.end(), [&](const Vec& a, const Vec& b) {
    return std::atan2(a(1) - c(1), a(0) - c(0)) < std::atan2(b(1) - c(1), b(0) - c(0));
  });
  double area = 0.0;
  for (size_t i = 0; i < ordered.size(); ++i) {
    const Vec& a = ordered[i];
    const Vec& b = ordered[(i + 1) % ordered.size()];
    area += a(0) * b(1) - b(0) * a(1);
  }
  return 0.5 * std::abs(area);
}

double polygon_area(const Polytope& p) {
  if (p.dim != 2) throw std::invalid_argument("polygon_area: 2D only");
  return polygon_area(p.vertices.empty() ? enumerate_vertices_unchecked(p) : p.vertices);
}

std::vector<Vec> clip_polygon(const std::vector<Vec>& poly, const Vec& normal, double offset) {
  std::vector<Vec> out;
  const size_t k = poly.size();
  if (k == 0) return out;
  auto side = [&](const Vec& v) { return normal.dot(v) + offset; };
  for (size_t i = 0; i < k; ++i) {
    const Vec& cur = poly[i];
    const Vec& nxt = poly[(i + 1) % k];
    double sc = side(cur), sn = side(nxt);
    if (sc >= 0) out.push_back(cur);
    if ((sc > 0 && sn < 0) || (sc < 0 && sn > 0)) {
      double t = sc / (sc - sn);
      out.push_back(cur + t * (nxt - cur));
    }
  }
  return out;
}

Partition Partition::build(std::vector<Polytope> cells, Polytope domain) {
  Partition part;
  if (domain.vertices.empty()) domain.vertices = vertices_of(domain);  // also checks boundedness
  part.domain = std::move(domain);
  part.cells = std::move(cells);

  const int n = part.domain.dim;
  PointDeduper dedup(n);
  part.cell_vertex_ids.resize(part.cells.size());
  for (size_t ci = 0; ci < part.cells.size(); ++ci) {
    auto& cell = part.cells[ci];
    if (cell.vertices.empty()) cell.vertices = enumerate_vertices_unchecked(cell);
    if (cell.vertices.size() < static_cast<size_t>(n + 1))
      throw std::runtime_error("partition cell is lower-dimensional");
    for (const auto& v : cell.vertices) {
      int id = dedup.insert(v, nullptr);
      part.cell_vertex_ids[ci].push_back(id);
    }
    std::sort(part.cell_vertex_ids[ci].begin(), part.cell_vertex_ids[ci].end());
    part.cell_vertex_ids[ci].erase(
        std::unique(part.cell_vertex_ids[ci].begin(), part.cell_vertex_ids[ci].end()),
        part.cell_vertex_ids[ci].end());
  }
  part.vertex_table.resize(dedup.points().size());
  for (size_t vi = 0; vi < dedup.points().size(); ++vi) {
    part.vertex_table[vi].point = dedup.points()[vi];
    const Vec res = part.domain.E * part.vertex_table[vi].point + part.domain.e;
    part.vertex_table[vi].on_boundary = (res.array().abs() <= kGeomTol).any();
  }
  for (size_t ci = 0; ci < part.cells.size(); ++ci)
    for (int vid : part.cell_vertex_ids[ci])
      part.vertex_table[vid].cells.push_back(static_cast<int>(ci));
  for (size_t ci = 0; ci < part.cells.size(); ++ci) {
    bool on_b = false;
    for (int vid : part.cell_vertex_ids[ci]) on_b = on_b || part.vertex_table[vid].on_boundary;
    if (on_b) part.boundary_cell_ids.push_back(static_cast<int>(ci));
  }
  return part;
}

int Partition::locate(const Vec& x, double tol) const {
  for (size_t i = 0; i < cells.size(); ++i)
    if (cells[i].contains(x, tol)) return static_cast<int>(i);
  return -1;
}

namespace {

bool same_vertex_set(const std::vector<Vec>& a, const std::vector<Vec>& b, double tol) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if ((a[i] - b[i]).lpNorm<Eigen::Infinity>() > tol) return false;
  return true;
}

}  // namespace

Partition product_partition(const Partition& a, const Partition& b) {
  if (a.dim() != b.dim() || !same_vertex_set(a.domain.vertices, b.domain.vertices, 1e-7))
    throw std::invalid_argument("product_partition: mismatched domains");

  std::vector<Polytope> cells;
  for (size_t i = 0; i < a.cells.size(); ++i) {
    const auto& ca = a.cells[i];
    // bounding-box prefilter
    Vec lo_a = ca.vertices[0], hi_a = ca.vertices[0];
    for (const auto& v : ca.vertices) {
      lo_a = lo_a.cwiseMin(v);
      hi_a = hi_a.cwiseMax(v);
    }
    for (size_t j = 0; j < b.cells.size(); ++j) {
      const auto& cb = b.cells[j];
      bool disjoint = false;
      Vec lo_b = cb.vertices[0], hi_b = cb.vertices[0];
      for (const auto& v : cb.vertices) {
        lo_b = lo_b.cwiseMin(v);
        hi_b = hi_b.cwiseMax(v);
      }
      for (int d = 0; d < a.dim(); ++d)
        if (lo_a(d) > hi_b(d) + kGeomTol || lo_b(d) > hi_a(d) + kGeomTol) disjoint = true;
      if (disjoint) continue;

      Mat E(ca.E.rows() + cb.E.rows(), a.dim());
      Vec e(ca.E.rows() + cb.E.rows());
      E << ca.E, cb.E;
      e << ca.e, cb.e;
      Polytope inter = Polytope::from_halfspaces(std::move(E), std::move(e));
      if (chebyshev_radius(inter) <= kFullDimTol) continue;
      inter.vertices = enumerate_vertices_unchecked(inter);
      cells.push_back(prune_redundant(std::move(inter)));
    }
  }
  return Partition::build(std::move(cells), a.domain);
}

SplitResult split_cell(const Partition& p, int cell_id, const std::optional<Vec>& witness) {
  if (cell_id < 0 || cell_id >= static_cast<int>(p.cells.size()))
    throw std::invalid_argument("split_cell: bad cell id");
  const Polytope& cell = p.cells[cell_id];
  const int n = p.dim();
  if (witness && !cell.contains(*witness, 1e-7))
    throw std::invalid_argument("split_cell: witness outside cell");

  std::vector<Polytope> children;
  if (!witness) {
    // longest-axis bisection through the barycenter
    Vec lo = cell.vertices[0], hi = cell.vertices[0], bary = Vec::Zero(n);
    for (const auto& v : cell.vertices) {
      lo = lo.cwiseMin(v);
      hi = hi.cwiseMax(v);
      bary += v;
    }
    bary /= static_cast<double>(cell.vertices.size());
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    double c = bary(axis);
    for (double sgn : {-1.0, 1.0}) {
      Mat E(cell.E.rows() + 1, n);
      Vec e(cell.E.rows() + 1);
      E.topRows(cell.E.rows()) = cell.E;
      e.head(cell.E.rows()) = cell.e;
      E.row(cell.E.rows()).setZero();
      E(cell.E.rows(), axis) = sgn;
      e(cell.E.rows()) = -sgn * c;  // sgn*(x_axis - c) >= 0
      Polytope child = Polytope::from_halfspaces(std::move(E), std::move(e));
      child.vertices = enumerate_vertices_unchecked(child);
      if (child.vertices.size() < static_cast<size_t>(n + 1) || chebyshev_radius(child) < kGeomTol)
        throw std::runtime_error("degenerate refinement");
      if (n == 2 && polygon_area(child) < 1e-12) throw std::runtime_error("degenerate refinement");
      children.push_back(prune_redundant(std::move(child)));
    }
  } else {
    // star subdivision: one pyramid per facet whose plane misses the witness
    Polytope pruned = prune_redundant(cell);
    for (int r = 0; r < pruned.num_halfspaces(); ++r) {
      if (std::abs(pruned.E.row(r).dot(*witness) + pruned.e(r)) <= kGeomTol) continue;
      std::vector<Vec> pts;
      for (const auto& v : pruned.vertices)
        if (std::abs(pruned.E.row(r).dot(v) + pruned.e(r)) <= 1e-7) pts.push_back(v);
      if (pts.size() < static_cast<size_t>(n)) continue;
      pts.push_back(*witness);
      Polytope child = Polytope::from_vertices(pts);
      if (child.vertices.size() < static_cast<size_t>(n + 1) || chebyshev_radius(child) < kGeomTol)
        throw std::runtime_error("degenerate refinement");
      if (n == 2 && polygon_area(child) < 1e-12) throw std::runtime_error("degenerate refinement");
      children.push_back(prune_redundant(std::move(child)));
    }
    if (children.size() < 2) throw std::runtime_error("degenerate refinement");
  }

  std::vector<Polytope> cells = p.cells;
  SplitResult res;
  cells[cell_id] = children[0];
  res.child_ids.push_back(cell_id);
  for (size_t i = 1; i < children.size(); ++i) {
    res.child_ids.push_back(static_cast<int>(cells.size()));
    cells.push_back(children[i]);
  }
  res.partition = Partition::build(std::move(cells), p.domain);
  return res;
}

}  // namespace pwacert::geo
