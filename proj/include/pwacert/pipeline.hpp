#pragma once

#include <string>

#include "pwacert/config.hpp"
#include "pwacert/verify.hpp"

namespace pwacert::pipeline {

struct RunResult {
  bool certified = false;
  int qp_infeasibilities = 0;
  double min_h_over_trajectories = std::numeric_limits<double>::quiet_NaN();
  double surrogate_residual = 0.0;
  double fit_seconds = 0.0;
  double region_seconds = 0.0;
  double uis_seconds = 0.0;
  double verify_seconds = 0.0;
  double total_seconds = 0.0;
  verify::CertifiedResult certified_result;
  std::string out_dir;
};

// Full pipeline: surrogate fit -> exact PWA conversion -> certification loop
// -> simulation suite; writes barrier.json, verify.json, timings.csv,
// levelsets.svg, trajectory CSVs and a manifest under cfg.out_dir.
RunResult run_pipeline(const config::RunConfig& cfg);

dynamics::DynamicsModel make_system(const config::RunConfig& cfg);

}  // namespace pwacert::pipeline
