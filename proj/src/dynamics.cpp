#include "pwacert/dynamics.hpp"

#include <cmath>
#include <exception>

#include "pwacert/parallel.hpp"

namespace pwacert::dynamics {

std::vector<Vec> DynamicsModel::input_vertices() const {
  if (m == 0) return {Vec(0)};
  return geo::vertices_of(input_set);
}

Vec DynamicsModel::saturate(const Vec& u) const {
  if (m == 0) return Vec(0);
  if (input_set.contains(u, 0.0)) return u;
  return project_onto_polytope(input_set, u);
}

Vec DynamicsModel::closed_loop(const Vec& x) const {
  if (m == 0) return f(x);
  return f(x) + g(x) * saturate(kappa(x));
}

namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

DynamicsModel make_pendulum() {
  DynamicsModel dyn;
  dyn.name = "pendulum";
  dyn.n = 2;
  dyn.m = 1;
  dyn.f = [](const Vec& x) { return v2(x(1), std::sin(x(0))); };
  dyn.g = [](const Vec&) {
    Mat G(2, 1);
    G << 0.0, 1.0;
    return G;
  };
  dyn.kappa = [](const Vec& x) {
    Vec u(1);
    u << -3.0 * x(0) - 3.0 * x(1);
    return u;
  };
  Vec lo(1), hi(1);
  lo << -1.5;
  hi << 1.5;
  dyn.input_set = geo::Polytope::box(lo, hi);
  const double pi = std::acos(-1.0);
  dyn.domain = geo::Polytope::box(v2(-pi, -pi), v2(pi, pi));
  return dyn;
}

DynamicsModel make_poly2d() {
  DynamicsModel dyn;
  dyn.name = "poly2d";
  dyn.n = 2;
  dyn.m = 0;
  dyn.f = [](const Vec& x) {
    return v2(x(0) * x(0) + x(0) * x(1) + x(0), x(0) * x(1) + x(1) * x(1) + x(1));
  };
  dyn.g = [](const Vec&) { return Mat(2, 0); };
  dyn.kappa = [](const Vec&) { return Vec(0); };
  dyn.input_set = geo::Polytope::from_halfspaces(Mat(0, 0), Vec(0));
  dyn.domain = geo::Polytope::box(v2(-2, -2), v2(2, 2));
  return dyn;
}

// Cart-pole with a point-mass pole, angle measured from the upright position
// after the published pi-shift. State (cart position, cart velocity, angle,
// angular rate), force input.
DynamicsModel make_cartpole() {
  DynamicsModel dyn;
  dyn.name = "cartpole";
  dyn.n = 4;
  dyn.m = 1;
  const double mc = 1.0, mp = 0.1, l = 1.0, grav = 9.81;
  dyn.f = [=](const Vec& x) {
    double th = x(2), om = x(3);
    double s = std::sin(th), c = std::cos(th);
    double denom = mc + mp * s * s;
    Vec out(4);
    out(0) = x(1);
    out(1) = mp * s * (l * om * om - grav * c) / denom;
    out(2) = om;
    out(3) = ((mc + mp) * grav * s - mp * l * om * om * s * c) / (l * denom);
    return out;
  };
  dyn.g = [=](const Vec& x) {
    double th = x(2);
    double s = std::sin(th), c = std::cos(th);
    double denom = mc + mp * s * s;
    Mat G(4, 1);
    G << 0.0, 1.0 / denom, 0.0, -c / (l * denom);
    return G;
  };
  // published LQR gains; positive sign stabilizes in this angle convention
  dyn.kappa = [](const Vec& x) {
    Vec u(1);
    u << x(0) + 2.4109 * x(1) + 34.3620 * x(2) + 10.7009 * x(3);
    return u;
  };
  Vec lo(1), hi(1);
  lo << -30.0;
  hi << 30.0;
  dyn.input_set = geo::Polytope::box(lo, hi);
  Vec dlo = Vec::Constant(4, -1.0), dhi = Vec::Constant(4, 1.0);
  dyn.domain = geo::Polytope::box(dlo, dhi);
  return dyn;
}

}  // namespace

DynamicsModel builtin(const std::string& name) {
  if (name == "pendulum") return make_pendulum();
  if (name == "poly2d") return make_poly2d();
  if (name == "cartpole") return make_cartpole();
  throw std::invalid_argument("unknown builtin system: " + name);
}

Trajectory simulate(const DynamicsModel& dyn, const Controller& controller, const Vec& x0,
                    const SimOptions& opts, const BarrierEval& barrier) {
  if (opts.dt > 1e-2) throw std::invalid_argument("simulate: dt must be <= 1e-2");
  if (!dyn.domain.contains(x0, kGeomTol)) throw std::invalid_argument("simulate: x0 outside domain");

  auto field = [&](const Vec& x) -> Vec {
    if (dyn.m == 0) return dyn.f(x);
    Vec u = dyn.saturate(controller(x));
    return dyn.f(x) + dyn.g(x) * u;
  };

  Trajectory traj;
  const int steps = static_cast<int>(std::llround(opts.horizon / opts.dt));
  Vec x = x0;
  for (int k = 0; k <= steps; ++k) {
    TrajectoryPoint pt;
    pt.t = k * opts.dt;
    pt.x = x;
    pt.u = dyn.m == 0 ? Vec(0) : dyn.saturate(controller(x));
    if (barrier) pt.h = barrier(x);
    traj.points.push_back(pt);
    if (k == steps) break;

    Vec k1 = field(x);
    Vec k2 = field(x + 0.5 * opts.dt * k1);
    Vec k3 = field(x + 0.5 * opts.dt * k2);
    Vec k4 = field(x + opts.dt * k3);
    x = x + (opts.dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!x.allFinite()) throw std::runtime_error("integration blow-up");
    if (!dyn.domain.contains(x, kGeomTol)) {
      traj.exited_domain = true;
      break;
    }
  }
  return traj;
}

std::vector<Trajectory> simulate_batch(const DynamicsModel& dyn, const Controller& controller,
                                       const std::vector<Vec>& starts, const SimOptions& opts,
                                       const BarrierEval& barrier, bool parallel) {
  std::vector<Trajectory> out(starts.size());
  std::exception_ptr err;
  parallel_for(
      static_cast<int>(starts.size()),
      [&](int i) {
        try {
          out[i] = simulate(dyn, controller, starts[i], opts, barrier);
        } catch (...) {
#pragma omp critical
          if (!err) err = std::current_exception();
        }
      },
      parallel);
  if (err) std::rethrow_exception(err);
  return out;
}

std::vector<Trajectory> simulate_batch_serial(const DynamicsModel& dyn,
                                              const Controller& controller,
                                              const std::vector<Vec>& starts,
                                              const SimOptions& opts, const BarrierEval& barrier) {
  return simulate_batch(dyn, controller, starts, opts, barrier, false);
}

Vec project_onto_polytope(const geo::Polytope& p, const Vec& point) {
  const int n = p.dim;
  if (p.contains(point, 0.0)) return point;
  const int k = p.num_halfspaces();
  double best_obj = std::numeric_limits<double>::infinity();
  Vec best = point;
  std::vector<int> subset;
  // enumerate active sets of size 1..n (empty set handled by the early return)
  std::function<void(int)> rec = [&](int start) {
    if (!subset.empty()) {
      const int s = static_cast<int>(subset.size());
      Mat Es(s, n);
      Vec es(s);
      for (int i = 0; i < s; ++i) {
        Es.row(i) = p.E.row(subset[i]);
        es(i) = p.e(subset[i]);
      }
      Mat gram = Es * Es.transpose();
      Eigen::FullPivLU<Mat> lu(gram);
      lu.setThreshold(1e-10);
      if (lu.isInvertible()) {
        Vec mu = lu.solve(-(Es * point + es));
        if ((mu.array() >= -1e-9).all()) {
          Vec z = point + Es.transpose() * mu;
          if (p.contains(z, 1e-8)) {
            double obj = (z - point).squaredNorm();
            if (obj < best_obj) {
              best_obj = obj;
              best = z;
            }
          }
        }
      }
    }
    if (static_cast<int>(subset.size()) == n) return;
    for (int i = start; i < k; ++i) {
      subset.push_back(i);
      rec(i + 1);
      subset.pop_back();
    }
  };
  rec(0);
  if (!std::isfinite(best_obj)) throw std::runtime_error("projection failed");
  return best;
}

}  // namespace pwacert::dynamics
