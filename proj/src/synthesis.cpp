#include "pwacert/synthesis.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <set>
#include <stdexcept>

namespace pwacert::synthesis {

void SynthesisConfig::validate() const {
  if (alpha <= 0.0) throw std::invalid_argument("synthesis: alpha must be positive");
  if (eps1 <= 0.0 || eps2 <= 0.0 || eps3 <= 0.0)
    throw std::invalid_argument("synthesis: tolerances must be positive");
  if (max_refinements < 0) throw std::invalid_argument("synthesis: max_refinements < 0");
}

std::vector<Vec> UncertaintyMap::vertices_for(int cell, int dim) const {
  if (cell < static_cast<int>(delta_vertices.size()) && !delta_vertices[cell].empty())
    return delta_vertices[cell];
  return {Vec::Zero(dim)};  // the degenerate set {0}
}

bool UncertaintyMap::is_trivial(int cell) const {
  if (cell >= static_cast<int>(delta_vertices.size())) return true;
  for (const auto& v : delta_vertices[cell])
    if (v.lpNorm<Eigen::Infinity>() > 0.0) return false;
  return true;
}

UncertaintyMap UncertaintyMap::inherit(const std::vector<int>& child_ids, int new_size) const {
  UncertaintyMap out;
  out.delta_vertices = delta_vertices;
  out.delta_vertices.resize(new_size);
  if (!child_ids.empty()) {
    const auto& parent = out.delta_vertices[child_ids[0]];  // parent slot became child 0
    for (size_t i = 1; i < child_ids.size(); ++i) out.delta_vertices[child_ids[i]] = parent;
  }
  return out;
}

std::vector<Vec> UncertaintyMap::box_vertices(const Vec& bound) {
  const int n = static_cast<int>(bound.size());
  std::vector<int> live;
  for (int i = 0; i < n; ++i)
    if (bound(i) > 0.0) live.push_back(i);
  std::vector<Vec> out;
  const int count = 1 << live.size();
  for (int mask = 0; mask < count; ++mask) {
    Vec v = Vec::Zero(n);
    for (size_t b = 0; b < live.size(); ++b)
      v(live[b]) = (mask >> b & 1) ? bound(live[b]) : -bound(live[b]);
    out.push_back(v);
  }
  return out;
}

std::vector<Vec> UncertaintyMap::segment_vertices(const Vec& e) {
  if (e.lpNorm<Eigen::Infinity>() == 0.0) return {Vec::Zero(e.size())};
  return {e, Vec(-e)};
}

LpBuild build_lp(const pwa::PwaFunction& dyn, const SynthesisConfig& cfg,
                 const UncertaintyMap& unc) {
  cfg.validate();
  const auto& part = dyn.partition;
  if (part.cells.empty()) throw std::invalid_argument("build_lp: empty partition");
  const int n = part.dim();
  const int num_cells = static_cast<int>(part.cells.size());
  const int num_verts = static_cast<int>(part.vertex_table.size());

  LpBuild out;
  auto& prob = out.problem;
  auto& lay = out.layout;
  lay.s_col.resize(num_cells);
  lay.t_col.resize(num_cells);
  for (int c = 0; c < num_cells; ++c) {
    lay.s_col[c] = prob.num_vars;
    for (int d = 0; d < n; ++d) prob.add_var(0.0, false);
    lay.t_col[c] = prob.add_var(0.0, false);
  }
  lay.taub_col.assign(num_verts, -1);
  lay.tauint_col.assign(num_verts, -1);
  for (int v = 0; v < num_verts; ++v) {
    if (part.vertex_table[v].on_boundary)
      lay.taub_col[v] = prob.add_var(1.0, true);
    else
      lay.tauint_col[v] = prob.add_var(1.0, true);
  }

  for (int c = 0; c < num_cells; ++c) {
    const auto& piece = dyn.pieces[c];
    for (int vid : part.cell_vertex_ids[c]) {
      const Vec& v = part.vertex_table[vid].point;
      // h_c(v) = s_c . v + t_c
      std::vector<std::pair<int, double>> hterms;
      for (int d = 0; d < n; ++d) hterms.push_back({lay.s_col[c] + d, v(d)});
      hterms.push_back({lay.t_col[c], 1.0});

      if (part.vertex_table[vid].on_boundary) {
        auto terms = hterms;
        terms.push_back({lay.taub_col[vid], -1.0});
        prob.add_row(std::move(terms), lp::RowSense::kLe, -cfg.eps1);
      } else {
        auto terms = hterms;
        terms.push_back({lay.tauint_col[vid], 1.0});
        prob.add_row(std::move(terms), lp::RowSense::kGe, cfg.eps2);
      }

      const Vec flow_base = piece.A * v + piece.a;
      const auto deltas = unc.vertices_for(c, n);
      for (size_t di = 0; di < deltas.size(); ++di) {
        // s_c . (A_c v + a_c + delta) + alpha (s_c . v + t_c) >= eps3
        std::vector<std::pair<int, double>> terms;
        const Vec coeff = flow_base + deltas[di] + cfg.alpha * v;
        for (int d = 0; d < n; ++d)
          if (coeff(d) != 0.0) terms.push_back({lay.s_col[c] + d, coeff(d)});
        terms.push_back({lay.t_col[c], cfg.alpha});
        prob.add_row(std::move(terms), lp::RowSense::kGe, cfg.eps3);
        lay.flow_rows.push_back({c, vid, static_cast<int>(di)});
      }
    }
  }
  // continuity ties: chain consecutive incident cells at each shared vertex
  for (int vid = 0; vid < num_verts; ++vid) {
    const auto& cells = part.vertex_table[vid].cells;
    const Vec& v = part.vertex_table[vid].point;
    for (size_t i = 0; i + 1 < cells.size(); ++i) {
      int a = cells[i], b = cells[i + 1];
      std::vector<std::pair<int, double>> terms;
      for (int d = 0; d < n; ++d) {
        if (v(d) != 0.0) {
          terms.push_back({lay.s_col[a] + d, v(d)});
          terms.push_back({lay.s_col[b] + d, -v(d)});
        }
      }
      terms.push_back({lay.t_col[a], 1.0});
      terms.push_back({lay.t_col[b], -1.0});
      prob.add_row(std::move(terms), lp::RowSense::kEq, 0.0);
    }
  }
  return out;
}

namespace {

struct SolveOutcome {
  lp::Solution sol;
  LpBuild build;
};

SynthesisResult extract_result(const pwa::PwaFunction& dyn, const SynthesisConfig& cfg,
                               const UncertaintyMap& unc, const SolveOutcome& so) {
  const auto& part = dyn.partition;
  const int n = part.dim();
  const int num_cells = static_cast<int>(part.cells.size());
  const int num_verts = static_cast<int>(part.vertex_table.size());

  SynthesisResult res;
  res.dynamics = dyn;
  res.uncertainty = unc;
  res.alpha = cfg.alpha;
  res.barrier.partition = part;
  res.barrier.out_dim = 1;
  res.barrier.pieces.resize(num_cells);
  for (int c = 0; c < num_cells; ++c) {
    Mat A(1, n);
    for (int d = 0; d < n; ++d) A(0, d) = so.sol.x(so.build.layout.s_col[c] + d);
    Vec a(1);
    a(0) = so.sol.x(so.build.layout.t_col[c]);
    res.barrier.pieces[c] = {A, a};
  }
  res.slack_boundary = Vec::Zero(num_verts);
  res.slack_interior = Vec::Zero(num_verts);
  for (int v = 0; v < num_verts; ++v) {
    if (so.build.layout.taub_col[v] >= 0)
      res.slack_boundary(v) = so.sol.x(so.build.layout.taub_col[v]);
    if (so.build.layout.tauint_col[v] >= 0)
      res.slack_interior(v) = so.sol.x(so.build.layout.tauint_col[v]);
  }
  res.objective = so.sol.objective;
  res.certified = res.slack_boundary.sum() <= cfg.slack_tol;
  return res;
}

}  // namespace

SynthesisResult synthesize(const pwa::PwaFunction& dyn_in, const SynthesisConfig& cfg,
                           const UncertaintyMap& unc_in) {
  cfg.validate();
  pwa::PwaFunction dyn = dyn_in;
  UncertaintyMap unc = unc_in;
  unc.delta_vertices.resize(dyn.partition.cells.size());

  LpStats stats;
  auto t0 = std::chrono::steady_clock::now();
  auto seconds_since = [](auto start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  SolveOutcome so;
  int rounds = 0;
  const bool debug = std::getenv("PWACERT_SYNTH_DEBUG") != nullptr;
  while (true) {
    so.build = build_lp(dyn, cfg, unc);
    so.sol = lp::solve(so.build.problem);
    stats.iterations += so.sol.iterations;
    stats.rows = static_cast<int>(so.build.problem.rows.size());
    stats.cols = so.build.problem.num_vars;
    if (debug)
      std::fprintf(stderr, "[synth] alpha=%g round=%d cells=%zu rows=%d cols=%d status=%s iters=%d obj=%g\n",
                   cfg.alpha, rounds, dyn.partition.cells.size(), stats.rows, stats.cols,
                   lp::status_name(so.sol.status), so.sol.iterations, so.sol.objective);

    if (so.sol.status == lp::Status::kInfeasible) {
      // The flow rows carry no slack; retry after splitting the widest cell.
      if (rounds >= cfg.max_refinements)
        throw std::runtime_error("synthesis: LP infeasible and refinement budget exhausted");
      ++stats.infeasible_retries;
      int widest = 0;
      double best = -1.0;
      for (size_t c = 0; c < dyn.partition.cells.size(); ++c) {
        const auto& verts = dyn.partition.cells[c].vertices;
        Vec lo = verts[0], hi = verts[0];
        for (const auto& v : verts) {
          lo = lo.cwiseMin(v);
          hi = hi.cwiseMax(v);
        }
        double extent = (hi - lo).maxCoeff();
        if (extent > best) {
          best = extent;
          widest = static_cast<int>(c);
        }
      }
      auto split = geo::split_cell(dyn.partition, widest, std::nullopt);
      unc = unc.inherit(split.child_ids, static_cast<int>(split.partition.cells.size()));
      dyn = pwa::split_pwa_cell(dyn, widest, std::nullopt);
      ++rounds;
      ++stats.refinements;
      continue;
    }
    if (so.sol.status != lp::Status::kOptimal)
      throw std::runtime_error(std::string("synthesis: unexpected LP status ") +
                               lp::status_name(so.sol.status));

    // refinement targets: cells incident to any vertex with slack above tol
    std::set<int> targets;
    const auto& lay = so.build.layout;
    const auto& table = dyn.partition.vertex_table;
    for (size_t vid = 0; vid < table.size(); ++vid) {
      double tau = 0.0;
      if (lay.taub_col[vid] >= 0) tau = so.sol.x(lay.taub_col[vid]);
      if (lay.tauint_col[vid] >= 0) tau = std::max(tau, so.sol.x(lay.tauint_col[vid]));
      if (tau > cfg.slack_tol)
        for (int c : table[vid].cells) targets.insert(c);
    }
    if (targets.empty() || rounds >= cfg.max_refinements) break;

    // ids stay valid across splits: the split slot is reused, new cells append
    for (int cell : targets) {
      auto split = geo::split_cell(dyn.partition, cell, std::nullopt);
      unc = unc.inherit(split.child_ids, static_cast<int>(split.partition.cells.size()));
      dyn = pwa::split_pwa_cell(dyn, cell, std::nullopt);
    }
    ++rounds;
    ++stats.refinements;
  }

  stats.solve_seconds = seconds_since(t0);
  SynthesisResult res = extract_result(dyn, cfg, unc, so);
  res.stats = stats;
  return res;
}

}  // namespace pwacert::synthesis
