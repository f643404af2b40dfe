#pragma once

#include <cstdint>

#include "pwacert/common.hpp"

namespace pwacert::dynamics {
struct DynamicsModel;
}

namespace pwacert::pwa {

// One hidden ReLU layer, identity output: y = W2 relu(W1 x + b1) + b2.
struct ReluNetwork {
  Mat W1;  // hidden x n
  Vec b1;
  Mat W2;  // n_out x hidden
  Vec b2;

  int input_dim() const { return static_cast<int>(W1.cols()); }
  int hidden_dim() const { return static_cast<int>(W1.rows()); }
  int output_dim() const { return static_cast<int>(W2.rows()); }

  Vec eval(const Vec& x) const;
  // Rows of X are samples; returns one output row per sample.
  Mat eval_batch(const Mat& X) const;
};

struct SurrogateFit {
  ReluNetwork net;
  double holdout_max_residual = 0.0;
  double final_mse = 0.0;
  int epochs = 0;
};

struct TrainOptions {
  int epochs = 4000;
  double learning_rate = 0.02;
  double momentum = 0.9;
  int restarts = 3;       // independent inits, best train loss wins
  int holdout_grid = 33;  // per axis for n<=2, reduced automatically in 4D
};

// Fits the saturated closed loop f + g*sat(kappa) on uniform samples of the
// domain with full-batch gradient descent plus momentum; deterministic for a
// fixed seed. A final least-squares polish of the output layer keeps exactly
// representable targets (e.g. linear closed loops) at machine-level residual.
SurrogateFit fit_surrogate(const dynamics::DynamicsModel& dyn, int width, int samples,
                           std::uint64_t seed, const TrainOptions& opts = {});

}  // namespace pwacert::pwa
