#pragma once

#include "pwacert/dynamics.hpp"
#include "pwacert/uis.hpp"

namespace pwacert::dynamics {

// Raised when no admissible input satisfies the barrier constraint; carries
// the offending state. Must not fire inside a verified set.
struct CbfQpInfeasible : std::runtime_error {
  explicit CbfQpInfeasible(Vec state);
  Vec x;
};

// Minimally modifies the saturated nominal law subject to
// s_active.(f + g u) >= -alpha_bar(h(x)) and A_u u <= c_u. Solved exactly by
// active-set enumeration (inputs are low-dimensional in every benchmark).
Vec cbf_qp_control(const DynamicsModel& dyn, const uis::UisBarrier& barrier, const Vec& x);

Controller nominal_controller(const DynamicsModel& dyn);
Controller cbf_qp_controller(const DynamicsModel& dyn, const uis::UisBarrier& barrier);

}  // namespace pwacert::dynamics
