#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <set>

#include "pwacert/geometry.hpp"
#include "pwacert/serialize.hpp"

using namespace pwacert;
using geo::Partition;
using geo::Polytope;

namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

// Test-local oracle: solve every n-subset of halfspace boundaries and keep
// feasible intersection points.
std::vector<Vec> brute_force_vertices(const Mat& E, const Vec& e) {
  const int n = static_cast<int>(E.cols());
  const int k = static_cast<int>(E.rows());
  std::vector<Vec> out;
  std::vector<int> idx(n);
  std::function<void(int, int)> rec = [&](int start, int depth) {
    if (depth == n) {
      Mat A(n, n);
      Vec b(n);
      for (int i = 0; i < n; ++i) {
        A.row(i) = E.row(idx[i]);
        b(i) = -e(idx[i]);
      }
      Eigen::FullPivLU<Mat> lu(A);
      lu.setThreshold(1e-9);
      if (!lu.isInvertible()) return;
      Vec x = lu.solve(b);
      if (((E * x + e).array() >= -1e-9).all()) {
        for (const auto& q : out)
          if ((q - x).lpNorm<Eigen::Infinity>() <= 1e-9) return;
        out.push_back(x);
      }
      return;
    }
    for (int i = start; i < k; ++i) {
      idx[depth] = i;
      rec(i + 1, depth + 1);
    }
  };
  rec(0, 0);
  return out;
}

bool matches_up_to_order(std::vector<Vec> a, std::vector<Vec> b, double tol) {
  if (a.size() != b.size()) return false;
  for (const auto& p : a) {
    bool found = false;
    for (const auto& q : b)
      if ((p - q).lpNorm<Eigen::Infinity>() <= tol) {
        found = true;
        break;
      }
    if (!found) return false;
  }
  return true;
}

Partition quadrants(double half) {
  Vec lo = v2(-half, -half), hi = v2(half, half);
  Polytope domain = Polytope::box(lo, hi);
  std::vector<Polytope> cells;
  for (double sx : {-1.0, 1.0})
    for (double sy : {-1.0, 1.0}) {
      Vec clo = v2(sx < 0 ? -half : 0.0, sy < 0 ? -half : 0.0);
      Vec chi = v2(sx < 0 ? 0.0 : half, sy < 0 ? 0.0 : half);
      cells.push_back(Polytope::box(clo, chi));
    }
  return Partition::build(std::move(cells), domain);
}

}  // namespace

TEST_CASE("box vertices are the corners") {
  Polytope p = Polytope::box(v2(-1, -1), v2(1, 1));
  auto verts = geo::vertices_of(p);
  REQUIRE(verts.size() == 4);
  std::set<std::pair<int, int>> got;
  for (const auto& v : verts) got.insert({static_cast<int>(std::round(v(0))), static_cast<int>(std::round(v(1)))});
  CHECK(got.count({-1, -1}) == 1);
  CHECK(got.count({1, 1}) == 1);
}

TEST_CASE("simplex vertices") {
  Mat E(3, 2);
  Vec e(3);
  E << 1, 0, 0, 1, -1, -1;
  e << 0, 0, 1;
  Polytope p = Polytope::from_halfspaces(E, e);
  auto verts = geo::vertices_of(p);
  REQUIRE(verts.size() == 3);
  CHECK(matches_up_to_order(verts, {v2(0, 0), v2(1, 0), v2(0, 1)}, 1e-9));
}

TEST_CASE("unbounded polytope throws, empty gives empty list") {
  Mat E(2, 2);
  Vec e(2);
  E << 1, 0, 0, 1;
  e << 0, 0;  // first quadrant, unbounded
  Polytope p = Polytope::from_halfspaces(E, e);
  CHECK_THROWS_WITH_AS(geo::vertices_of(p), "unbounded polytope", std::runtime_error);

  Mat E2(4, 2);
  Vec e2(4);
  E2 << 1, 0, -1, 0, 0, 1, 0, -1;
  e2 << -2, 1, 1, 1;  // x >= 2 and x <= -1: empty
  Polytope q = Polytope::from_halfspaces(E2, e2);
  CHECK(geo::vertices_of(q).empty());
}

TEST_CASE("random 2D H-reps match the brute-force oracle") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    // 6 random halfspaces around the origin plus a bounding box
    Mat E(10, 2);
    Vec e(10);
    for (int i = 0; i < 6; ++i) {
      Vec a = v2(gauss(rng), gauss(rng));
      if (a.norm() < 0.1) a = v2(1.0, 0.0);
      a.normalize();
      E.row(i) = -a.transpose();
      e(i) = 0.5 + std::abs(gauss(rng));  // a.x <= e
    }
    E.row(6) = v2(1, 0).transpose();
    E.row(7) = v2(-1, 0).transpose();
    E.row(8) = v2(0, 1).transpose();
    E.row(9) = v2(0, -1).transpose();
    e(6) = e(7) = e(8) = e(9) = 4.0;
    Polytope p = Polytope::from_halfspaces(E, e);
    auto expect = brute_force_vertices(p.E, p.e);
    auto got = geo::vertices_of(p);
    CHECK(matches_up_to_order(got, expect, 1e-7));
  }
}

TEST_CASE("V-rep to H-rep round trip is the identity on random polytopes") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int dim : {2, 3}) {
    for (int trial = 0; trial < 12; ++trial) {
      std::vector<Vec> cloud;
      for (int i = 0; i < 3 * dim + 4; ++i)
        cloud.push_back(Vec::NullaryExpr(dim, [&](int) { return gauss(rng); }));
      Polytope hull = Polytope::from_vertices(cloud);
      auto verts = hull.vertices;
      REQUIRE(verts.size() >= static_cast<size_t>(dim + 1));
      Polytope again = Polytope::from_vertices(verts);
      CHECK(matches_up_to_order(verts, again.vertices, 1e-9));
    }
  }
}

TEST_CASE("product partition is idempotent") {
  Partition p = quadrants(1.0);
  Partition prod = geo::product_partition(p, p);
  CHECK(prod.cells.size() == p.cells.size());
}

TEST_CASE("vertical x horizontal split gives quadrants") {
  Polytope domain = Polytope::box(v2(0, 0), v2(1, 1));
  std::vector<Polytope> vsplit = {Polytope::box(v2(0, 0), v2(0.5, 1)),
                                  Polytope::box(v2(0.5, 0), v2(1, 1))};
  std::vector<Polytope> hsplit = {Polytope::box(v2(0, 0), v2(1, 0.5)),
                                  Polytope::box(v2(0, 0.5), v2(1, 1))};
  Partition pv = Partition::build(vsplit, domain);
  Partition ph = Partition::build(hsplit, domain);
  Partition prod = geo::product_partition(pv, ph);
  CHECK(prod.cells.size() == 4);
  Partition prod2 = geo::product_partition(ph, pv);
  CHECK(prod2.cells.size() == 4);
}

TEST_CASE("product partition covers the domain exactly once (sampling oracle)") {
  // two random-ish partitions of the pendulum domain
  double half = 3.14159;
  Polytope domain = Polytope::box(v2(-half, -half), v2(half, half));
  std::vector<Polytope> a_cells, b_cells;
  // partition A: three vertical strips
  double xs[4] = {-half, -0.7, 1.1, half};
  for (int i = 0; i < 3; ++i) a_cells.push_back(Polytope::box(v2(xs[i], -half), v2(xs[i + 1], half)));
  // partition B: the domain cut along x + y = -0.3
  {
    Mat E(5, 2);
    Vec e(5);
    E << 1, 0, -1, 0, 0, 1, 0, -1, 1, 1;
    e << half, half, half, half, 0.3;  // x + y + 0.3 >= 0
    b_cells.push_back(Polytope::from_halfspaces(E, e));
    Mat E2(5, 2);
    Vec e2(5);
    E2 << 1, 0, -1, 0, 0, 1, 0, -1, -1, -1;
    e2 << half, half, half, half, -0.3;  // -(x + y) - 0.3 >= 0
    b_cells.push_back(Polytope::from_halfspaces(E2, e2));
  }
  Partition pa = Partition::build(a_cells, domain);
  Partition pb = Partition::build(b_cells, domain);
  Partition prod = geo::product_partition(pa, pb);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unif(-half, half);
  int hits_one = 0;
  for (int i = 0; i < 10000; ++i) {
    Vec x = v2(unif(rng), unif(rng));
    int inside = 0;
    for (const auto& cell : prod.cells)
      if (cell.contains(x, 1e-9)) ++inside;
    // interior points land in exactly one cell; facet points may touch two
    bool on_seam = false;
    for (const auto& cell : prod.cells)
      for (int r = 0; r < cell.num_halfspaces(); ++r)
        if (std::abs(cell.E.row(r).dot(x) + cell.e(r)) < 1e-7) on_seam = true;
    if (!on_seam) {
      REQUIRE(inside == 1);
      ++hits_one;
    }
  }
  CHECK(hits_one > 9000);
}

TEST_CASE("split without witness bisects the longest axis at the barycenter") {
  Partition p = quadrants(1.0);
  auto res = geo::split_cell(p, 0, std::nullopt);
  CHECK(res.child_ids.size() == 2);
  CHECK(res.partition.cells.size() == 5);
  // total area conserved
  double total = 0.0;
  for (const auto& c : res.partition.cells) total += geo::polygon_area(c);
  CHECK(total == doctest::Approx(4.0).epsilon(1e-9));
}

TEST_CASE("star subdivision of a triangle at its barycenter gives 3 cells") {
  std::vector<Vec> tri = {v2(0, 0), v2(1, 0), v2(0, 1)};
  Polytope cell = Polytope::from_vertices(tri);
  Polytope domain = cell;
  Partition p = Partition::build({cell}, domain);
  Vec w = v2(1.0 / 3, 1.0 / 3);
  auto res = geo::split_cell(p, 0, w);
  CHECK(res.child_ids.size() == 3);
  double total = 0.0;
  for (const auto& c : res.partition.cells) total += geo::polygon_area(c);
  CHECK(total == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("split keeps the partition valid (sampling oracle)") {
  Partition p = quadrants(1.0);
  auto r1 = geo::split_cell(p, 1, std::nullopt);
  auto r2 = geo::split_cell(r1.partition, 2, v2(0.5, -0.5));
  const Partition& q = r2.partition;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unif(-1, 1);
  for (int i = 0; i < 10000; ++i) {
    Vec x = v2(unif(rng), unif(rng));
    int inside = 0;
    for (const auto& cell : q.cells)
      if (cell.contains(x, 1e-9)) ++inside;
    REQUIRE(inside >= 1);
  }
  double total = 0.0;
  for (const auto& c : q.cells) total += geo::polygon_area(c);
  CHECK(total == doctest::Approx(4.0).epsilon(1e-9));
}

TEST_CASE("degenerate witness split throws") {
  Partition p = quadrants(1.0);
  // witness a hair off a facet plane: the pyramid over that facet is a sliver
  CHECK_THROWS_WITH_AS(geo::split_cell(p, 0, v2(-0.5, -1.5e-9)), "degenerate refinement",
                       std::runtime_error);
}

TEST_CASE("witness at a cell corner still yields a valid split") {
  Partition p = quadrants(1.0);
  auto res = geo::split_cell(p, 0, v2(-1.0, -1.0));
  CHECK(res.child_ids.size() == 2);
  double total = 0.0;
  for (const auto& c : res.partition.cells) total += geo::polygon_area(c);
  CHECK(total == doctest::Approx(4.0).epsilon(1e-9));
}

TEST_CASE("partition classifies every cell-vertex incidence exactly once") {
  Partition p = quadrants(1.0);
  int boundary = 0, interior = 0;
  for (const auto& rec : p.vertex_table) (rec.on_boundary ? boundary : interior)++;
  CHECK(boundary == 8);
  CHECK(interior == 1);  // the origin
  CHECK(p.boundary_cell_ids.size() == 4);
}

TEST_CASE("polytope JSON round trip preserves values to 1e-12") {
  Polytope p = Polytope::box(v2(-1.25, -0.5), v2(0.75, 2.0));
  p.vertices = geo::vertices_of(p);
  auto j = serialize::to_json(p);
  Polytope q = serialize::polytope_from_json(j);
  REQUIRE(q.num_halfspaces() == p.num_halfspaces());
  CHECK((q.E - p.E).lpNorm<Eigen::Infinity>() <= 1e-12);
  CHECK((q.e - p.e).lpNorm<Eigen::Infinity>() <= 1e-12);
  REQUIRE(q.vertices.size() == p.vertices.size());
  for (size_t i = 0; i < q.vertices.size(); ++i)
    CHECK((q.vertices[i] - p.vertices[i]).lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("product partition rejects mismatched domains") {
  Partition a = quadrants(1.0);
  Partition b = quadrants(2.0);
  CHECK_THROWS_AS(geo::product_partition(a, b), std::invalid_argument);
}
