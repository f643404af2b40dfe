#include "pwacert/pwa.hpp"

#include <deque>
#include <exception>
#include <set>
#include <stdexcept>

#include "pwacert/parallel.hpp"

namespace pwacert::pwa {

int PwaFunction::locate(const Vec& x, double tol) const {
  int cell = partition.locate(x, tol);
  if (cell < 0) throw std::runtime_error("out of domain");
  return cell;
}

Vec PwaFunction::eval(const Vec& x) const {
  int cell = locate(x);
  return pieces[cell].A * x + pieces[cell].a;
}

double PwaFunction::eval_scalar(const Vec& x) const {
  int cell = locate(x);
  return pieces[cell].A.row(0).dot(x) + pieces[cell].a(0);
}

double PwaFunction::continuity_defect() const {
  double worst = 0.0;
  for (const auto& rec : partition.vertex_table) {
    for (size_t i = 0; i + 1 < rec.cells.size(); ++i)
      for (size_t j = i + 1; j < rec.cells.size(); ++j) {
        Vec a = eval_in_cell(rec.point, rec.cells[i]);
        Vec b = eval_in_cell(rec.point, rec.cells[j]);
        worst = std::max(worst, (a - b).lpNorm<Eigen::Infinity>());
      }
  }
  return worst;
}

Mat eval_batch(const PwaFunction& f, const Mat& X, bool parallel) {
  const int rows = static_cast<int>(X.rows());
  Mat Y(rows, f.out_dim);
  std::exception_ptr err;
  parallel_for(
      rows,
      [&](int i) {
        try {
          Y.row(i) = f.eval(X.row(i).transpose()).transpose();
        } catch (...) {
#pragma omp critical
          if (!err) err = std::current_exception();
        }
      },
      parallel);
  if (err) std::rethrow_exception(err);
  return Y;
}

Mat eval_batch_serial(const PwaFunction& f, const Mat& X) { return eval_batch(f, X, false); }

namespace {

using Pattern = std::vector<std::uint8_t>;

Pattern pattern_at(const ReluNetwork& net, const Vec& x, const std::vector<int>& active_rows) {
  Vec z = net.W1 * x + net.b1;
  Pattern p(net.hidden_dim(), 0);
  for (int i = 0; i < net.hidden_dim(); ++i) p[i] = z(i) > 0.0 ? 1 : 0;
  // neurons without a usable hyperplane keep the sign of their bias
  for (int i = 0; i < net.hidden_dim(); ++i) {
    bool has_row = std::find(active_rows.begin(), active_rows.end(), i) != active_rows.end();
    if (!has_row) p[i] = net.b1(i) > 0.0 ? 1 : 0;
  }
  return p;
}

geo::Polytope region_for(const ReluNetwork& net, const geo::Polytope& domain, const Pattern& pat,
                         const std::vector<int>& active_rows) {
  const int n = net.input_dim();
  Mat E(domain.E.rows() + static_cast<int>(active_rows.size()), n);
  Vec e(domain.E.rows() + static_cast<int>(active_rows.size()));
  E.topRows(domain.E.rows()) = domain.E;
  e.head(domain.E.rows()) = domain.e;
  int r = static_cast<int>(domain.E.rows());
  for (int i : active_rows) {
    double sgn = pat[i] ? 1.0 : -1.0;
    E.row(r) = sgn * net.W1.row(i);
    e(r) = sgn * net.b1(i);
    ++r;
  }
  return geo::Polytope::from_halfspaces(std::move(E), std::move(e));
}

}  // namespace

PwaFunction relu_to_pwa(const ReluNetwork& net, const geo::Polytope& domain) {
  const int n = net.input_dim();
  const int width = net.hidden_dim();
  if (domain.dim != n) throw std::invalid_argument("relu_to_pwa: dimension mismatch");
  if (!geo::is_bounded(domain)) throw std::runtime_error("unbounded polytope");

  std::vector<int> active_rows;
  for (int i = 0; i < width; ++i)
    if (net.W1.row(i).norm() > 1e-12) active_rows.push_back(i);

  Vec center;
  if (geo::chebyshev_radius(domain, &center) <= 0.0)
    throw std::invalid_argument("relu_to_pwa: empty domain");

  std::set<Pattern> seen;
  std::vector<std::pair<Pattern, geo::Polytope>> regions;
  std::deque<Pattern> frontier;

  auto try_add = [&](const Pattern& pat) {
    if (!seen.insert(pat).second) return;
    frontier.push_back(pat);
  };
  try_add(pattern_at(net, center, active_rows));
  // a few deterministic interior seeds guard against corner-only adjacency
  for (const auto& v : geo::vertices_of(domain))
    try_add(pattern_at(net, Vec(0.5 * (v + center)), active_rows));

  while (!frontier.empty()) {
    // feasibility tests for the whole frontier run in parallel
    std::vector<Pattern> batch(frontier.begin(), frontier.end());
    frontier.clear();
    std::vector<int> feasible(batch.size(), 0);
    std::vector<geo::Polytope> polys(batch.size());
    std::exception_ptr err;
    parallel_for(static_cast<int>(batch.size()), [&](int bi) {
      try {
        geo::Polytope reg = region_for(net, domain, batch[bi], active_rows);
        if (geo::chebyshev_radius(reg) > kGeomTol) {
          polys[bi] = std::move(reg);
          feasible[bi] = 1;
        }
      } catch (...) {
#pragma omp critical
        if (!err) err = std::current_exception();
      }
    });
    if (err) std::rethrow_exception(err);
    for (size_t bi = 0; bi < batch.size(); ++bi) {
      if (!feasible[bi]) continue;
      regions.push_back({batch[bi], std::move(polys[bi])});
      if (regions.size() > 50000) throw std::runtime_error("region explosion");
      for (int i : active_rows) {
        Pattern flipped = batch[bi];
        flipped[i] ^= 1;
        try_add(flipped);
      }
    }
  }
  if (regions.empty()) throw std::runtime_error("relu_to_pwa: no feasible region");

  std::vector<geo::Polytope> cells;
  std::vector<AffinePiece> pieces;
  cells.reserve(regions.size());
  for (auto& [pat, poly] : regions) {
    poly.vertices = geo::enumerate_vertices_unchecked(poly);
    if (poly.vertices.size() < static_cast<size_t>(n + 1)) continue;  // sliver artifact
    Mat D = Mat::Zero(width, width);
    for (int i = 0; i < width; ++i) D(i, i) = pat[i] ? 1.0 : 0.0;
    AffinePiece piece;
    piece.A = net.W2 * D * net.W1;
    piece.a = net.W2 * D * net.b1 + net.b2;
    cells.push_back(geo::prune_redundant(std::move(poly)));
    pieces.push_back(std::move(piece));
  }

  PwaFunction f;
  f.partition = geo::Partition::build(std::move(cells), domain);
  f.pieces = std::move(pieces);
  f.out_dim = net.output_dim();
  return f;
}

PwaFunction split_pwa_cell(const PwaFunction& f, int cell_id, const std::optional<Vec>& witness) {
  auto res = geo::split_cell(f.partition, cell_id, witness);
  PwaFunction out;
  out.partition = std::move(res.partition);
  out.pieces = f.pieces;
  out.out_dim = f.out_dim;
  for (size_t i = 1; i < res.child_ids.size(); ++i) out.pieces.push_back(f.pieces[cell_id]);
  return out;
}

}  // namespace pwacert::pwa
