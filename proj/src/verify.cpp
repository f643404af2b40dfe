#include "pwacert/verify.hpp"

#include <chrono>
#include <cmath>
#include <exception>

#include "pwacert/parallel.hpp"
#include "pwacert/simplex.hpp"

namespace pwacert::verify {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Gray-code Sobol points, dimensions up to 6 (first Joe-Kuo direction sets).
class Sobol {
 public:
  explicit Sobol(int dim) : dim_(dim), state_(dim, 0), count_(0) {
    static const struct {
      int s;
      unsigned a;
      unsigned m[4];
    } kInit[5] = {
        {1, 0, {1, 0, 0, 0}},
        {2, 1, {1, 3, 0, 0}},
        {3, 1, {1, 3, 1, 0}},
        {3, 2, {1, 1, 1, 0}},
        {4, 1, {1, 1, 3, 3}},
    };
    if (dim > 6) throw std::invalid_argument("sobol: dim > 6");
    v_.assign(dim, std::vector<unsigned>(kBits, 0));
    for (int b = 0; b < kBits; ++b) v_[0][b] = 1u << (kBits - 1 - b);  // van der Corput
    for (int d = 1; d < dim; ++d) {
      const auto& ini = kInit[d - 1];
      int s = ini.s;
      for (int b = 0; b < s; ++b) v_[d][b] = ini.m[b] << (kBits - 1 - b);
      for (int b = s; b < kBits; ++b) {
        unsigned val = v_[d][b - s] ^ (v_[d][b - s] >> s);
        for (int k = 1; k < s; ++k)
          if (ini.a >> (s - 1 - k) & 1u) val ^= v_[d][b - k];
        v_[d][b] = val;
      }
    }
  }

  // next point in [0,1)^dim
  Vec next() {
    unsigned c = 0;
    unsigned value = count_ + 1;
    while (value & 1u) {
      value >>= 1;
      ++c;
    }
    for (int d = 0; d < dim_; ++d) state_[d] ^= v_[d][c];
    ++count_;
    Vec x(dim_);
    for (int d = 0; d < dim_; ++d) x(d) = state_[d] / std::pow(2.0, kBits);
    return x;
  }

 private:
  static constexpr int kBits = 30;
  int dim_;
  std::vector<unsigned> state_;
  unsigned count_;
  std::vector<std::vector<unsigned>> v_;
};

}  // namespace

std::vector<FacetPatch> facet_patches(uis::UisBarrier& b) {
  const geo::Partition& prod = b.ensure_product_partition();
  const int n = prod.dim();
  const int m = static_cast<int>(b.members.size());
  std::vector<FacetPatch> patches;

  for (size_t j = 0; j < prod.cells.size(); ++j) {
    const geo::Polytope& cell = prod.cells[j];
    Vec center;
    if (geo::chebyshev_radius(cell, &center) <= 0.0) continue;

    // member pieces are constant on a product cell
    std::vector<Vec> grads(m);
    std::vector<double> offs(m);
    for (int k = 0; k < m; ++k) {
      int mc = b.members[k].barrier.partition.locate(center, 1e-7);
      if (mc < 0) {  // numerical sliver: fall back to the vertex mean
        Vec mean = Vec::Zero(n);
        for (const auto& v : cell.vertices) mean += v;
        mean /= static_cast<double>(cell.vertices.size());
        mc = b.members[k].barrier.partition.locate(mean, 1e-7);
      }
      if (mc < 0) throw std::logic_error("facet_patches: product cell outside member partition");
      grads[k] = b.members[k].barrier.pieces[mc].gradient();
      offs[k] = b.members[k].barrier.pieces[mc].offset();
    }

    for (int k = 0; k < m; ++k) {
      if (grads[k].norm() < 1e-12) continue;  // flat piece has no transversal zero set
      // rows: cell, dominance over other members, then the equality h_k = 0
      const int rows = cell.num_halfspaces() + (m - 1);
      Mat E(rows + 2, n);
      Vec e(rows + 2);
      E.topRows(cell.num_halfspaces()) = cell.E;
      e.head(cell.num_halfspaces()) = cell.e;
      int r = cell.num_halfspaces();
      for (int l = 0; l < m; ++l) {
        if (l == k) continue;
        E.row(r) = (grads[k] - grads[l]).transpose();
        e(r) = offs[k] - offs[l];
        ++r;
      }
      E.row(r) = grads[k].transpose();
      e(r) = offs[k];
      E.row(r + 1) = -grads[k].transpose();
      e(r + 1) = -offs[k];

      // relative-interior witness: maximize the uniform slack of the
      // inequality rows while pinned to the zero hyperplane
      lp::Problem prob;
      for (int d = 0; d < n; ++d) prob.add_var(0.0, false);
      int rvar = prob.add_var(-1.0, true);
      geo::Polytope ineq = geo::Polytope::from_halfspaces(E.topRows(rows), e.head(rows));
      for (int q = 0; q < ineq.num_halfspaces(); ++q) {
        std::vector<std::pair<int, double>> terms;
        for (int d = 0; d < n; ++d)
          if (ineq.E(q, d) != 0.0) terms.push_back({d, ineq.E(q, d)});
        terms.push_back({rvar, -1.0});
        prob.add_row(std::move(terms), lp::RowSense::kGe, -ineq.e(q));
      }
      {
        std::vector<std::pair<int, double>> terms;
        double nrm = grads[k].norm();
        for (int d = 0; d < n; ++d) terms.push_back({d, grads[k](d) / nrm});
        prob.add_row(std::move(terms), lp::RowSense::kEq, -offs[k] / nrm);
      }
      prob.add_row({{rvar, 1.0}}, lp::RowSense::kLe, 1e6);
      auto sol = lp::solve(prob);
      if (sol.status != lp::Status::kOptimal || sol.x(rvar) <= kGeomTol) continue;

      FacetPatch patch;
      patch.cell_id = static_cast<int>(j);
      patch.member_id = k;
      patch.patch = geo::Polytope::from_halfspaces(E, e);
      patch.patch.vertices = geo::enumerate_vertices_unchecked(patch.patch);
      if (patch.patch.vertices.size() < static_cast<size_t>(n)) continue;
      patch.patch_vertices = patch.patch.vertices;
      patch.gradient = grads[k];
      patch.offset = offs[k];
      patch.interior_point = sol.x.head(n);
      patches.push_back(std::move(patch));
    }
  }
  return patches;
}

namespace {

struct PatchFrame {
  Mat Q;          // n x (n-1), orthonormal complement of the gradient
  Vec x0;         // point on the hyperplane
  geo::Polytope ypoly;
  std::vector<Vec> ystarts;
  double diam = 0.0;
};

PatchFrame make_frame(const FacetPatch& patch) {
  const int n = static_cast<int>(patch.gradient.size());
  PatchFrame fr;
  fr.x0 = patch.interior_point;
  Mat M(n, 1);
  M.col(0) = patch.gradient.normalized();
  Eigen::HouseholderQR<Mat> qr(M);
  Mat Qfull = qr.householderQ();
  fr.Q = Qfull.rightCols(n - 1);

  // inequality rows in y-space (skip the equality pair: rows parallel to s)
  const Vec shat = patch.gradient.normalized();
  std::vector<int> rows;
  for (int r = 0; r < patch.patch.num_halfspaces(); ++r) {
    double par = std::abs(patch.patch.E.row(r).dot(shat));
    if (par > 1.0 - 1e-9) continue;
    rows.push_back(r);
  }
  Mat Ey(static_cast<int>(rows.size()), n - 1);
  Vec ey(static_cast<int>(rows.size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    Ey.row(static_cast<int>(i)) = patch.patch.E.row(rows[i]) * fr.Q;
    ey(static_cast<int>(i)) = patch.patch.E.row(rows[i]).dot(fr.x0) + patch.patch.e(rows[i]);
  }
  fr.ypoly = geo::Polytope::from_halfspaces(std::move(Ey), std::move(ey));

  for (const auto& v : patch.patch_vertices) fr.ystarts.push_back(fr.Q.transpose() * (v - fr.x0));
  Vec centroid = Vec::Zero(n - 1);
  for (const auto& y : fr.ystarts) centroid += y;
  if (!fr.ystarts.empty()) centroid /= static_cast<double>(fr.ystarts.size());
  fr.ystarts.push_back(centroid);
  for (const auto& a : fr.ystarts)
    for (const auto& b : fr.ystarts) fr.diam = std::max(fr.diam, (a - b).norm());
  return fr;
}

void add_sobol_starts(PatchFrame* fr, int count) {
  const int d = static_cast<int>(fr->Q.cols());
  Vec lo = fr->ystarts[0], hi = fr->ystarts[0];
  for (const auto& y : fr->ystarts) {
    lo = lo.cwiseMin(y);
    hi = hi.cwiseMax(y);
  }
  Sobol sobol(d);
  for (int i = 0; i < count; ++i) {
    Vec u = sobol.next();
    Vec y(d);
    for (int q = 0; q < d; ++q) y(q) = lo(q) + u(q) * (hi(q) - lo(q));
    if (!fr->ypoly.contains(y, 0.0)) y = dynamics::project_onto_polytope(fr->ypoly, y);
    fr->ystarts.push_back(y);
  }
}

}  // namespace

Vec farkas_multipliers(const dynamics::DynamicsModel& dyn, const Vec& w) {
  if (dyn.m == 0) return Vec(0);
  const Mat Au = dyn.input_A();
  const Vec cu = dyn.input_c();
  const int p = static_cast<int>(Au.rows());
  lp::Problem prob;
  for (int i = 0; i < p; ++i) prob.add_var(cu(i), true);
  for (int col = 0; col < dyn.m; ++col) {
    std::vector<std::pair<int, double>> terms;
    for (int i = 0; i < p; ++i)
      if (Au(i, col) != 0.0) terms.push_back({i, Au(i, col)});
    prob.add_row(std::move(terms), lp::RowSense::kEq, w(col));
  }
  auto sol = lp::solve(prob);
  if (sol.status != lp::Status::kOptimal) return Vec::Zero(p);
  return sol.x;
}

VerificationOutcome verify_facet(const dynamics::DynamicsModel& dyn, const FacetPatch& patch,
                                 int restarts) {
  VerificationOutcome out;
  out.cell_id = patch.cell_id;
  out.member_id = patch.member_id;

  const Vec s = patch.gradient;
  const auto u_vertices = dyn.input_vertices();
  auto phi = [&](const Vec& x) {
    double drift = s.dot(dyn.f(x));
    if (dyn.m == 0) return drift;
    Vec w = dyn.g(x).transpose() * s;
    double support = -std::numeric_limits<double>::infinity();
    for (const auto& u : u_vertices) support = std::max(support, w.dot(u));
    return drift + support;
  };

  PatchFrame fr = make_frame(patch);
  const int ydim = static_cast<int>(fr.Q.cols());
  add_sobol_starts(&fr, std::max(0, restarts));
  // 1D patches additionally get a dense scan; descent then polishes
  if (ydim == 1) {
    Vec lo = fr.ystarts[0], hi = fr.ystarts[0];
    for (const auto& y : fr.ystarts) {
      lo = lo.cwiseMin(y);
      hi = hi.cwiseMax(y);
    }
    for (int i = 0; i <= 256; ++i) {
      Vec y(1);
      y(0) = lo(0) + (hi(0) - lo(0)) * i / 256.0;
      fr.ystarts.push_back(y);
    }
  }

  auto descend = [&](Vec y) {
    double fy = phi(fr.x0 + fr.Q * y);
    double step = std::max(1e-3, 0.05 * fr.diam);
    for (int it = 0; it < 120; ++it) {
      Vec grad(ydim);
      for (int d = 0; d < ydim; ++d) {
        Vec yp = y, ym = y;
        yp(d) += 1e-6;
        ym(d) -= 1e-6;
        grad(d) = (phi(fr.x0 + fr.Q * yp) - phi(fr.x0 + fr.Q * ym)) / 2e-6;
      }
      if (grad.norm() < 1e-12) break;
      bool improved = false;
      double theta = step;
      for (int half = 0; half < 10; ++half) {
        Vec cand = y - theta * grad;
        if (!fr.ypoly.contains(cand, 0.0)) cand = dynamics::project_onto_polytope(fr.ypoly, cand);
        double fc = phi(fr.x0 + fr.Q * cand);
        if (fc < fy - 1e-15) {
          y = cand;
          fy = fc;
          improved = true;
          step = theta * 1.5;
          break;
        }
        theta *= 0.5;
      }
      if (!improved) break;
    }
    return std::make_pair(y, fy);
  };

  double best = std::numeric_limits<double>::infinity();
  Vec best_y;
  int used = 0;
  auto run_starts = [&](size_t from) {
    for (size_t i = from; i < fr.ystarts.size(); ++i) {
      auto [y, fy] = descend(fr.ystarts[i]);
      ++used;
      if (std::isfinite(fy) && fy < best) {
        best = fy;
        best_y = y;
      }
    }
  };
  run_starts(0);
  if (std::isfinite(best) && std::abs(best) <= 1e-3) {
    // near-critical patch: densify the restart set
    size_t from = fr.ystarts.size();
    add_sobol_starts(&fr, 32);
    run_starts(from);
  }
  out.restarts_used = used;

  if (!std::isfinite(best)) {
    out.status = VerificationOutcome::Status::kSolverFailure;
    return out;
  }
  out.phi_star = best;
  out.witness = fr.x0 + fr.Q * best_y;
  if (dyn.m > 0) out.lambda_star = farkas_multipliers(dyn, Vec(dyn.g(out.witness).transpose() * s));
  out.status = best >= -1e-9 ? VerificationOutcome::Status::kVerified
                             : VerificationOutcome::Status::kCounterexample;
  return out;
}

std::vector<VerificationOutcome> verify_patches(const dynamics::DynamicsModel& dyn,
                                                const std::vector<FacetPatch>& patches,
                                                int restarts, bool parallel) {
  std::vector<VerificationOutcome> out(patches.size());
  std::exception_ptr err;
  parallel_for(
      static_cast<int>(patches.size()),
      [&](int i) {
        try {
          out[i] = verify_facet(dyn, patches[i], restarts);
        } catch (...) {
#pragma omp critical
          if (!err) err = std::current_exception();
        }
      },
      parallel);
  if (err) std::rethrow_exception(err);
  return out;
}

std::vector<VerificationOutcome> verify_patches_serial(const dynamics::DynamicsModel& dyn,
                                                       const std::vector<FacetPatch>& patches,
                                                       int restarts) {
  return verify_patches(dyn, patches, restarts, false);
}

synthesis::UncertaintyMap update_uncertainty(const synthesis::UncertaintyMap& unc, int cell_id,
                                             const Vec& e_star) {
  if (!e_star.allFinite()) throw std::invalid_argument("update_uncertainty: non-finite mismatch");
  synthesis::UncertaintyMap out = unc;
  if (cell_id >= static_cast<int>(out.delta_vertices.size()))
    out.delta_vertices.resize(cell_id + 1);
  Vec bound = e_star.cwiseAbs();
  for (const auto& v : out.delta_vertices[cell_id]) bound = bound.cwiseMax(v.cwiseAbs());
  out.delta_vertices[cell_id] = synthesis::UncertaintyMap::box_vertices(bound);
  return out;
}

CertifiedResult certify_nonlinear(const dynamics::DynamicsModel& dyn,
                                  const pwa::PwaFunction& surrogate,
                                  const synthesis::SynthesisConfig& cfg,
                                  const std::vector<double>& alpha_grid,
                                  const CertifyBudgets& budgets) {
  auto t_total = std::chrono::steady_clock::now();
  CertifiedResult result;
  auto& report = result.report;

  auto t_synth = std::chrono::steady_clock::now();
  result.barrier = uis::uis_sweep(surrogate, alpha_grid, cfg);
  report.uis_seconds += seconds_since(t_synth);

  for (int outer = 0; outer < budgets.outer_iters; ++outer) {
    IterationRecord rec;
    auto t_verify = std::chrono::steady_clock::now();
    auto patches = facet_patches(result.barrier);
    auto outcomes = verify_patches(dyn, patches, budgets.restarts);
    rec.verify_seconds = seconds_since(t_verify);
    report.verify_seconds += rec.verify_seconds;
    rec.patches = static_cast<int>(patches.size());
    for (auto& oc : outcomes) {
      if (oc.status == VerificationOutcome::Status::kCounterexample) {
        ++rec.counterexamples;
        oc.mismatch = dyn.closed_loop(oc.witness) - surrogate.eval(oc.witness);
      }
      if (oc.status == VerificationOutcome::Status::kSolverFailure) ++rec.solver_failures;
    }
    report.outcomes = outcomes;
    report.iterations.push_back(rec);

    if (rec.counterexamples == 0 && rec.solver_failures == 0) {
      result.certified = true;
      break;
    }
    if (outer + 1 >= budgets.outer_iters ||
        seconds_since(t_total) > budgets.wall_clock_s) {
      report.budget_exhausted = true;
      break;
    }

    // cell-local robustification, per member partition
    auto t_re = std::chrono::steady_clock::now();
    for (auto& oc : report.outcomes) {
      if (oc.status != VerificationOutcome::Status::kCounterexample) continue;
      for (auto& member : result.barrier.members) {
        int cell = member.dynamics.partition.locate(oc.witness, 1e-7);
        if (cell < 0) continue;
        member.uncertainty = update_uncertainty(member.uncertainty, cell, oc.mismatch);
      }
    }
    // re-solve every member on its own refined partition
    std::vector<uis::UisMember> updated;
    std::exception_ptr err;
    std::vector<std::optional<uis::UisMember>> slots(result.barrier.members.size());
    parallel_for(static_cast<int>(result.barrier.members.size()), [&](int mi) {
      try {
        auto& member = result.barrier.members[mi];
        synthesis::SynthesisConfig c = cfg;
        c.alpha = member.alpha;
        auto r = synthesis::synthesize(member.dynamics, c, member.uncertainty);
        if (r.certified) {
          uis::UisMember m;
          m.barrier = std::move(r.barrier);
          m.alpha = r.alpha;
          m.dynamics = std::move(r.dynamics);
          m.uncertainty = std::move(r.uncertainty);
          slots[mi] = std::move(m);
        }
      } catch (...) {
#pragma omp critical
        if (!err) err = std::current_exception();
      }
    });
    if (err) std::rethrow_exception(err);
    for (auto& slot : slots)
      if (slot) updated.push_back(std::move(*slot));
    rec.synth_seconds = seconds_since(t_re);
    report.uis_seconds += rec.synth_seconds;
    report.iterations.back().synth_seconds = rec.synth_seconds;
    if (updated.empty())
      throw std::runtime_error("no certified invariant set for any alpha in grid");
    result.barrier.members = std::move(updated);
    result.barrier.alpha_bar.alpha_min = result.barrier.members.front().alpha;
    result.barrier.alpha_bar.alpha_max = result.barrier.members.back().alpha;
    result.barrier.product.reset();
  }

  report.total_seconds = seconds_since(t_total);
  return result;
}

}  // namespace pwacert::verify
