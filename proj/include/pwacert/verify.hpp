#pragma once

#include <limits>
#include <vector>

#include "pwacert/cbf_qp.hpp"
#include "pwacert/uis.hpp"

namespace pwacert::verify {

// Piece of the zero level set inside one product-partition cell where one
// member is active: {x in X_j : h_k(x) = 0, h_k >= h_l for all l}.
struct FacetPatch {
  int cell_id = -1;
  int member_id = -1;
  geo::Polytope patch;  // ambient H-rep including the equality as a row pair
  std::vector<Vec> patch_vertices;
  Vec gradient;         // member gradient on this cell
  double offset = 0.0;  // h_k(x) = gradient.x + offset
  Vec interior_point;   // relative-interior witness
};

// Enumerates all boundary (cell, member) pairs over the product partition.
// Returns an empty list (with nothing to verify) when the zero set is empty.
std::vector<FacetPatch> facet_patches(uis::UisBarrier& b);

struct VerificationOutcome {
  enum class Status { kVerified, kCounterexample, kSolverFailure };
  int cell_id = -1;
  int member_id = -1;
  double phi_star = std::numeric_limits<double>::quiet_NaN();
  Vec witness;
  Vec lambda_star;  // Farkas multipliers at the witness
  Status status = Status::kSolverFailure;
  Vec mismatch;     // e* = f_cl(x*) - surrogate(x*); set on counterexamples
  int restarts_used = 0;
};

// Minimizes s_k.f(x) + max_{u in U} s_k.g(x) u over the patch with
// multi-start projected descent; the inner Farkas minimum over multipliers
// is replaced by its closed-form support value (exact by LP duality).
VerificationOutcome verify_facet(const dynamics::DynamicsModel& dyn, const FacetPatch& patch,
                                 int restarts);

std::vector<VerificationOutcome> verify_patches(const dynamics::DynamicsModel& dyn,
                                                const std::vector<FacetPatch>& patches,
                                                int restarts, bool parallel = true);
std::vector<VerificationOutcome> verify_patches_serial(const dynamics::DynamicsModel& dyn,
                                                       const std::vector<FacetPatch>& patches,
                                                       int restarts);

// Farkas multipliers lambda >= 0 with lambda^T A_u = w^T at minimal
// lambda^T c_u; solved as a small LP.
Vec farkas_multipliers(const dynamics::DynamicsModel& dyn, const Vec& w);

// Componentwise box hull of the previous set and {|d| <= |e*|}.
synthesis::UncertaintyMap update_uncertainty(const synthesis::UncertaintyMap& unc, int cell_id,
                                             const Vec& e_star);

struct CertifyBudgets {
  int outer_iters = 8;
  double wall_clock_s = std::numeric_limits<double>::infinity();
  int restarts = 8;
};

struct IterationRecord {
  int patches = 0;
  int counterexamples = 0;
  int solver_failures = 0;
  double verify_seconds = 0.0;
  double synth_seconds = 0.0;
};

struct CertifyReport {
  std::vector<IterationRecord> iterations;
  std::vector<VerificationOutcome> outcomes;  // final pass
  double uis_seconds = 0.0;       // synthesis time (all passes)
  double verify_seconds = 0.0;    // verification time (all passes)
  double total_seconds = 0.0;
  bool budget_exhausted = false;
};

struct CertifiedResult {
  uis::UisBarrier barrier;
  bool certified = false;
  CertifyReport report;
};

// Outer solve-verify-update loop: sweep with no uncertainty, verify every
// facet patch against the true dynamics, grow cell-local uncertainty at
// counterexamples, re-solve, repeat until clean or budgets exhaust.
CertifiedResult certify_nonlinear(const dynamics::DynamicsModel& dyn,
                                  const pwa::PwaFunction& surrogate,
                                  const synthesis::SynthesisConfig& cfg,
                                  const std::vector<double>& alpha_grid,
                                  const CertifyBudgets& budgets);

}  // namespace pwacert::verify
