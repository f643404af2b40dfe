#pragma once

#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "pwacert/geometry.hpp"

namespace pwacert::dynamics {

// Control-affine system x' = f(x) + g(x) u with a nominal feedback law and a
// compact polytopic input set A_u u <= c_u. Autonomous systems use m = 0.
struct DynamicsModel {
  std::string name;
  int n = 0;
  int m = 0;
  std::function<Vec(const Vec&)> f;
  std::function<Mat(const Vec&)> g;
  std::function<Vec(const Vec&)> kappa;
  geo::Polytope input_set;  // in u-space, stored as E u + e >= 0
  geo::Polytope domain;

  Mat input_A() const { return -input_set.E; }
  Vec input_c() const { return input_set.e; }
  std::vector<Vec> input_vertices() const;

  Vec saturate(const Vec& u) const;
  Vec nominal_input(const Vec& x) const { return saturate(kappa(x)); }
  Vec closed_loop(const Vec& x) const;
};

// The three benchmark systems with their exact published configurations.
DynamicsModel builtin(const std::string& name);

struct TrajectoryPoint {
  double t = 0.0;
  Vec x;
  Vec u;
  double h = std::numeric_limits<double>::quiet_NaN();
};

struct Trajectory {
  std::vector<TrajectoryPoint> points;
  bool exited_domain = false;
};

struct SimOptions {
  double horizon = 20.0;
  double dt = 1e-3;
};

using Controller = std::function<Vec(const Vec&)>;
using BarrierEval = std::function<double(const Vec&)>;

// RK4 with the controller evaluated at every stage state; inputs are
// saturated into U. Stops early (flagged) once the state leaves the domain;
// throws "integration blow-up" on non-finite states.
Trajectory simulate(const DynamicsModel& dyn, const Controller& controller, const Vec& x0,
                    const SimOptions& opts, const BarrierEval& barrier = nullptr);

std::vector<Trajectory> simulate_batch(const DynamicsModel& dyn, const Controller& controller,
                                       const std::vector<Vec>& starts, const SimOptions& opts,
                                       const BarrierEval& barrier = nullptr, bool parallel = true);
std::vector<Trajectory> simulate_batch_serial(const DynamicsModel& dyn,
                                              const Controller& controller,
                                              const std::vector<Vec>& starts,
                                              const SimOptions& opts,
                                              const BarrierEval& barrier = nullptr);

// Euclidean projection onto a polytope by enumerating small active sets;
// exact for the low-dimensional sets used here.
Vec project_onto_polytope(const geo::Polytope& p, const Vec& point);

}  // namespace pwacert::dynamics
