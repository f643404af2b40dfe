#include "pwacert/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <random>

#include "pwacert/cbf_qp.hpp"
#include "pwacert/parallel.hpp"
#include "pwacert/relu.hpp"
#include "pwacert/serialize.hpp"
#include "pwacert/svg.hpp"

namespace pwacert::pipeline {

namespace fs = std::filesystem;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Uniform rejection samples from the zero superlevel set.
std::vector<Vec> sample_inside(const uis::UisBarrier& barrier, int count, std::uint64_t seed) {
  std::vector<Vec> out;
  auto verts = geo::vertices_of(barrier.domain);
  Vec lo = verts[0], hi = verts[0];
  for (const auto& v : verts) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const int n = barrier.domain.dim;
  long long guard = 0;
  while (static_cast<int>(out.size()) < count) {
    if (++guard > 2000000LL * std::max(count, 1))
      throw std::runtime_error("sample_inside: certified set appears to have measure ~0");
    Vec x(n);
    for (int d = 0; d < n; ++d) x(d) = lo(d) + unif(rng) * (hi(d) - lo(d));
    if (!barrier.domain.contains(x, 0.0)) continue;
    try {
      if (barrier.value(x) >= 0.0) out.push_back(x);
    } catch (const std::runtime_error&) {
    }
  }
  return out;
}

void emit_levelsets(const std::string& path, const uis::UisBarrier& barrier) {
  auto verts = geo::vertices_of(barrier.domain);
  Vec lo = verts[0], hi = verts[0];
  for (const auto& v : verts) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  const int n = barrier.domain.dim;
  static const char* kColors[] = {"#1f77b4", "#2ca02c", "#9467bd", "#8c564b", "#e377c2"};
  std::vector<svg::LevelSetLayer> layers;

  // 4D systems get the angle/rate slice through the origin instead
  auto lift = [&](const Vec& p2) {
    if (n == 2) return p2;
    Vec x = Vec::Zero(n);
    x(2) = p2(0);
    x(3) = p2(1);
    return x;
  };
  Vec lo2 = n == 2 ? lo : Vec(lo.tail(2)), hi2 = n == 2 ? hi : Vec(hi.tail(2));

  for (size_t k = 0; k < barrier.members.size(); ++k) {
    auto field = [&](const Vec& p) {
      Vec x = lift(p);
      int cell = barrier.members[k].barrier.partition.locate(x, kGeomTol);
      if (cell < 0) return std::numeric_limits<double>::quiet_NaN();
      return barrier.members[k].barrier.pieces[cell].gradient().dot(x) +
             barrier.members[k].barrier.pieces[cell].offset();
    };
    svg::LevelSetLayer layer;
    layer.segments = svg::marching_squares(field, lo2, hi2, 400);
    layer.color = kColors[k % 5];
    layer.stroke_width = 1.0;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "alpha = %g", barrier.members[k].alpha);
    layer.label = buf;
    layers.push_back(std::move(layer));
  }
  auto union_field = [&](const Vec& p) {
    Vec x = lift(p);
    try {
      return barrier.value(x);
    } catch (const std::runtime_error&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  };
  svg::LevelSetLayer layer;
  layer.segments = svg::marching_squares(union_field, lo2, hi2, 400);
  layer.color = "#d62728";
  layer.stroke_width = 2.5;
  layer.label = "union";
  layers.push_back(std::move(layer));
  svg::write_svg(path, layers, lo2, hi2);
}

}  // namespace

dynamics::DynamicsModel make_system(const config::RunConfig& cfg) {
  if (!cfg.system.empty()) return dynamics::builtin(cfg.system);
  // user-supplied system: a PWA vector field acts as the ground truth
  auto j = serialize::read_json(cfg.model_path);
  auto f = std::make_shared<pwa::PwaFunction>(serialize::pwa_from_json(j));
  dynamics::DynamicsModel dyn;
  dyn.name = "pwa:" + cfg.model_path;
  dyn.n = f->partition.dim();
  dyn.m = 0;
  dyn.f = [f](const Vec& x) { return f->eval(x); };
  dyn.g = [n = dyn.n](const Vec&) { return Mat(n, 0); };
  dyn.kappa = [](const Vec&) { return Vec(0); };
  dyn.input_set = geo::Polytope::from_halfspaces(Mat(0, 0), Vec(0));
  dyn.domain = f->partition.domain;
  return dyn;
}

RunResult run_pipeline(const config::RunConfig& cfg) {
  auto t_total = std::chrono::steady_clock::now();
  RunResult res;
  res.out_dir = cfg.out_dir;
  fs::create_directories(cfg.out_dir);
  auto out = [&](const std::string& name) { return (fs::path(cfg.out_dir) / name).string(); };

  dynamics::DynamicsModel dyn = make_system(cfg);

  // 1) surrogate
  auto t0 = std::chrono::steady_clock::now();
  pwa::ReluNetwork net;
  if (!cfg.weights_path.empty()) {
    net = serialize::network_from_json(serialize::read_json(cfg.weights_path));
  } else {
    auto fit = pwa::fit_surrogate(dyn, cfg.width, cfg.samples, cfg.seed);
    net = fit.net;
    res.surrogate_residual = fit.holdout_max_residual;
  }
  serialize::write_json(out("network.json"), serialize::to_json(net));
  res.fit_seconds = seconds_since(t0);

  // 2) exact PWA form
  t0 = std::chrono::steady_clock::now();
  pwa::PwaFunction surrogate = pwa::relu_to_pwa(net, dyn.domain);
  res.region_seconds = seconds_since(t0);

  // 3) certification loop
  auto certified = verify::certify_nonlinear(dyn, surrogate, cfg.synthesis, cfg.alpha_grid,
                                             cfg.budgets);
  res.certified = certified.certified;
  res.uis_seconds = certified.report.uis_seconds;
  res.verify_seconds = certified.report.verify_seconds;

  serialize::write_json(out("barrier.json"), serialize::to_json(certified.barrier));
  serialize::write_json(out("verify.json"), serialize::to_json(certified.report.outcomes));

  // counterexample dump for plotting
  if (cfg.emit_csv) {
    std::ofstream ce(out("counterexamples.csv"));
    ce << "cell,member,phi_star";
    for (int d = 0; d < dyn.n; ++d) ce << ",x" << d + 1;
    ce << "\n";
    ce.precision(17);
    for (const auto& oc : certified.report.outcomes)
      if (oc.status == verify::VerificationOutcome::Status::kCounterexample) {
        ce << oc.cell_id << "," << oc.member_id << "," << oc.phi_star;
        for (int d = 0; d < dyn.n; ++d) ce << "," << oc.witness(d);
        ce << "\n";
      }
  }

  // 4) simulation suite
  double min_h = std::numeric_limits<double>::infinity();
  if (cfg.n_trajectories > 0 && res.certified) {
    auto starts = sample_inside(certified.barrier, cfg.n_trajectories, cfg.seed + 1);
    dynamics::SimOptions opts{cfg.horizon_s, cfg.dt};
    std::atomic<int> infeasible{0};
    auto controller = [&](const Vec& x) -> Vec {
      try {
        return dynamics::cbf_qp_control(dyn, certified.barrier, x);
      } catch (const dynamics::CbfQpInfeasible&) {
        ++infeasible;  // fall back to the nominal law, keep simulating
        return dyn.kappa(x);
      }
    };
    auto barrier_eval = [&](const Vec& x) {
      try {
        return certified.barrier.value(x);
      } catch (const std::runtime_error&) {
        return std::numeric_limits<double>::quiet_NaN();
      }
    };
    auto trajs = dynamics::simulate_batch(dyn, controller, starts, opts, barrier_eval);
    res.qp_infeasibilities = infeasible.load();
    for (size_t i = 0; i < trajs.size(); ++i) {
      for (const auto& pt : trajs[i].points)
        if (std::isfinite(pt.h)) min_h = std::min(min_h, pt.h);
      if (cfg.emit_csv && i < 20)
        serialize::write_trajectory_csv(out("traj_" + std::to_string(i) + ".csv"), trajs[i], dyn.n,
                                        dyn.m);
    }
  }
  res.min_h_over_trajectories = min_h;

  // 5) figures and reports
  if (cfg.emit_svg && (dyn.n == 2 || dyn.n == 4)) emit_levelsets(out("levelsets.svg"), certified.barrier);

  res.total_seconds = seconds_since(t_total);
  {
    std::ofstream os(out("timings.csv"));
    os << "stage,seconds\n";
    os << "surrogate_fit," << res.fit_seconds << "\n";
    os << "region_enumeration," << res.region_seconds << "\n";
    os << "uis_computation," << res.uis_seconds << "\n";
    os << "verification," << res.verify_seconds << "\n";
    os << "total," << res.total_seconds << "\n";
  }
  {
    serialize::json manifest;
    manifest["config_hash"] = config::fnv1a_hex(cfg.source_text);
    manifest["system"] = dyn.name;
    manifest["certified"] = res.certified;
    manifest["tool_version"] = "pwacert 0.1.0";
    manifest["artifacts"] = {out("network.json"), out("barrier.json"), out("verify.json"),
                             out("timings.csv")};
    if (cfg.emit_svg && (dyn.n == 2 || dyn.n == 4))
      manifest["artifacts"].push_back(out("levelsets.svg"));
    serialize::write_json(out("manifest.json"), manifest);
  }
  res.certified_result = std::move(certified);
  return res;
}

}  // namespace pwacert::pipeline
