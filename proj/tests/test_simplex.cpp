#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>
#include <random>
#include <sstream>

#include "pwacert/simplex.hpp"

using namespace pwacert;
using lp::Problem;
using lp::RowSense;
using lp::Status;

namespace {

// Test-local oracle: enumerate all basic points of {rows} (intersections of
// constraint boundaries taken as equalities), keep feasible ones, return the
// best objective. Independent of the simplex path.
struct DenseLp {
  Mat A;  // A z <= b
  Vec b;
  Vec c;
};

double brute_force_min(const DenseLp& q, bool* feasible) {
  const int n = static_cast<int>(q.c.size());
  const int m = static_cast<int>(q.b.size());
  double best = std::numeric_limits<double>::infinity();
  *feasible = false;
  std::vector<int> idx(n);
  std::function<void(int, int)> rec = [&](int start, int k) {
    if (k == n) {
      Mat M(n, n);
      Vec rhs(n);
      for (int i = 0; i < n; ++i) {
        M.row(i) = q.A.row(idx[i]);
        rhs(i) = q.b(idx[i]);
      }
      Eigen::FullPivLU<Mat> lu(M);
      lu.setThreshold(1e-10);
      if (!lu.isInvertible()) return;
      Vec z = lu.solve(rhs);
      if (((q.A * z - q.b).array() <= 1e-7).all()) {
        *feasible = true;
        best = std::min(best, q.c.dot(z));
      }
      return;
    }
    for (int i = start; i < m; ++i) {
      idx[k] = i;
      rec(i + 1, k + 1);
    }
  };
  rec(0, 0);
  return best;
}

lp::Solution solve_dense(const DenseLp& q) {
  Problem p;
  const int n = static_cast<int>(q.c.size());
  for (int i = 0; i < n; ++i) p.add_var(q.c(i), false);
  for (int r = 0; r < q.b.size(); ++r) {
    std::vector<std::pair<int, double>> terms;
    for (int i = 0; i < n; ++i) terms.push_back({i, q.A(r, i)});
    p.add_row(std::move(terms), RowSense::kLe, q.b(r));
  }
  return lp::solve(p);
}

// Random LP that is feasible and bounded by construction: box bounds plus
// random halfspaces shifted to contain a random interior point.
DenseLp random_lp(std::mt19937_64& rng, int n, int extra_rows) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.1, 2.0);
  DenseLp q;
  q.c = Vec::NullaryExpr(n, [&](int) { return gauss(rng); });
  int m = 2 * n + extra_rows;
  q.A = Mat::Zero(m, n);
  q.b = Vec::Zero(m);
  for (int i = 0; i < n; ++i) {
    q.A(2 * i, i) = 1.0;
    q.b(2 * i) = 10.0;
    q.A(2 * i + 1, i) = -1.0;
    q.b(2 * i + 1) = 10.0;
  }
  Vec z0 = Vec::NullaryExpr(n, [&](int) { return gauss(rng); });
  for (int r = 2 * n; r < m; ++r) {
    Vec a = Vec::NullaryExpr(n, [&](int) { return gauss(rng); });
    q.A.row(r) = a.transpose();
    q.b(r) = a.dot(z0) + unif(rng);
  }
  return q;
}

}  // namespace

TEST_CASE("min x subject to x >= 3") {
  Problem p;
  p.add_var(1.0, false);
  p.add_row({{0, 1.0}}, RowSense::kGe, 3.0);
  auto sol = lp::solve(p);
  REQUIRE(sol.status == Status::kOptimal);
  CHECK(sol.x(0) == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(sol.objective == doctest::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("equality rows and nonnegative vars") {
  // min x + 2y  s.t. x + y = 2, x,y >= 0  ->  x=2, y=0
  Problem p;
  p.add_var(1.0, true);
  p.add_var(2.0, true);
  p.add_row({{0, 1.0}, {1, 1.0}}, RowSense::kEq, 2.0);
  auto sol = lp::solve(p);
  REQUIRE(sol.status == Status::kOptimal);
  CHECK(sol.objective == doctest::Approx(2.0));  // x=2, y=0
  CHECK(sol.x(0) == doctest::Approx(2.0));
}

TEST_CASE("infeasible detected") {
  Problem p;
  p.add_var(0.0, false);
  p.add_row({{0, 1.0}}, RowSense::kGe, 3.0);
  p.add_row({{0, 1.0}}, RowSense::kLe, 1.0);
  CHECK(lp::solve(p).status == Status::kInfeasible);
}

TEST_CASE("unbounded detected") {
  Problem p;
  p.add_var(-1.0, false);
  p.add_row({{0, 1.0}}, RowSense::kGe, 0.0);
  CHECK(lp::solve(p).status == Status::kUnbounded);
}

TEST_CASE("degenerate LP does not cycle (Beale)") {
  // Beale's classic cycling example; Bland fallback must terminate it.
  Problem p;
  double c[4] = {-0.75, 150.0, -0.02, 6.0};
  for (double ci : c) p.add_var(ci, true);
  p.add_row({{0, 0.25}, {1, -60.0}, {2, -1.0 / 25.0}, {3, 9.0}}, RowSense::kLe, 0.0);
  p.add_row({{0, 0.5}, {1, -90.0}, {2, -1.0 / 50.0}, {3, 3.0}}, RowSense::kLe, 0.0);
  p.add_row({{2, 1.0}}, RowSense::kLe, 1.0);
  auto sol = lp::solve(p);
  REQUIRE(sol.status == Status::kOptimal);
  CHECK(sol.objective == doctest::Approx(-0.05).epsilon(1e-9));
}

TEST_CASE("random LPs match brute-force vertex enumeration") {
  std::mt19937_64 rng(20240817);
  int solved = 0;
  for (int trial = 0; trial < 120; ++trial) {
    int n = 2 + static_cast<int>(rng() % 5);          // up to 6 vars
    int extra = 2 + static_cast<int>(rng() % 10);     // up to ~20 rows
    DenseLp q = random_lp(rng, n, extra);
    bool feasible = false;
    double expect = brute_force_min(q, &feasible);
    auto sol = solve_dense(q);
    REQUIRE(feasible);
    REQUIRE(sol.status == Status::kOptimal);
    CHECK(std::abs(sol.objective - expect) <= 1e-7 * std::max(1.0, std::abs(expect)));
    ++solved;
  }
  CHECK(solved == 120);
}

TEST_CASE("dump produces a readable listing") {
  Problem p;
  p.add_var(1.0, false, "alpha");
  p.add_row({{0, 2.0}}, RowSense::kGe, 1.0);
  std::ostringstream os;
  lp::dump(p, os);
  auto text = os.str();
  CHECK(text.find("MINIMIZE") != std::string::npos);
  CHECK(text.find("alpha") != std::string::npos);
}
