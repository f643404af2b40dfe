#include "pwacert/cbf_qp.hpp"

#include <functional>

namespace pwacert::dynamics {

CbfQpInfeasible::CbfQpInfeasible(Vec state)
    : std::runtime_error("CBF-QP infeasible"), x(std::move(state)) {}

namespace {

// min ||u - target||^2 s.t. G u <= h, by active-set enumeration. Returns
// false when no KKT point is primal feasible.
bool solve_small_qp(const Mat& G, const Vec& h, const Vec& target, Vec* out) {
  const int m = static_cast<int>(target.size());
  const int k = static_cast<int>(G.rows());
  double best_obj = std::numeric_limits<double>::infinity();
  bool ok = false;
  if (((G * target - h).array() <= 1e-12).all()) {
    *out = target;
    return true;  // unconstrained optimum feasible
  }
  std::vector<int> subset;
  std::function<void(int)> rec = [&](int start) {
    if (!subset.empty()) {
      const int s = static_cast<int>(subset.size());
      Mat Gs(s, m);
      Vec hs(s);
      for (int i = 0; i < s; ++i) {
        Gs.row(i) = G.row(subset[i]);
        hs(i) = h(subset[i]);
      }
      Mat gram = Gs * Gs.transpose();
      Eigen::FullPivLU<Mat> lu(gram);
      lu.setThreshold(1e-12);
      if (lu.isInvertible()) {
        // stationarity: u = target - Gs^T mu, active rows tight, mu >= 0
        Vec mu = lu.solve(Gs * target - hs);
        if ((mu.array() >= -1e-9).all()) {
          Vec u = target - Gs.transpose() * mu;
          if (((G * u - h).array() <= 1e-8).all()) {
            double obj = (u - target).squaredNorm();
            if (obj < best_obj) {
              best_obj = obj;
              *out = u;
              ok = true;
            }
          }
        }
      }
    }
    if (static_cast<int>(subset.size()) == m) return;
    for (int i = start; i < k; ++i) {
      subset.push_back(i);
      rec(i + 1);
      subset.pop_back();
    }
  };
  rec(0);
  return ok;
}

}  // namespace

Vec cbf_qp_control(const DynamicsModel& dyn, const uis::UisBarrier& barrier, const Vec& x) {
  if (dyn.m == 0) return Vec(0);
  auto ev = barrier.eval(x);
  const Vec s = barrier.members[ev.member].barrier.pieces[ev.cell].gradient();
  const Vec target = dyn.nominal_input(x);

  // s.(f + g u) >= -alpha_bar(h)  as  -(g^T s).u <= alpha_bar(h) + s.f
  Vec a = dyn.g(x).transpose() * s;
  double b = barrier.alpha_bar(ev.value) + s.dot(dyn.f(x));
  Mat G(dyn.input_A().rows() + 1, dyn.m);
  Vec h(G.rows());
  G.topRows(dyn.input_A().rows()) = dyn.input_A();
  h.head(dyn.input_A().rows()) = dyn.input_c();
  G.row(G.rows() - 1) = -a.transpose();
  h(G.rows() - 1) = b;

  Vec u(dyn.m);
  if (!solve_small_qp(G, h, target, &u)) throw CbfQpInfeasible(x);
  return u;
}

Controller nominal_controller(const DynamicsModel& dyn) {
  return [&dyn](const Vec& x) { return dyn.kappa(x); };
}

Controller cbf_qp_controller(const DynamicsModel& dyn, const uis::UisBarrier& barrier) {
  return [&dyn, &barrier](const Vec& x) { return cbf_qp_control(dyn, barrier, x); };
}

}  // namespace pwacert::dynamics
