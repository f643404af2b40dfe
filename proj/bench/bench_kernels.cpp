// Timing comparison of the OpenMP kernels against their serial reference
// paths: batch PWA evaluation, batch simulation, and facet verification.
#include <chrono>
#include <cstdio>
#include <random>

#include "pwacert/cbf_qp.hpp"
#include "pwacert/parallel.hpp"
#include "pwacert/pwa.hpp"
#include "pwacert/relu.hpp"
#include "pwacert/uis.hpp"
#include "pwacert/verify.hpp"

using namespace pwacert;

namespace {

double now_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

template <typename F>
double time_once(F&& fn) {
  double t0 = now_seconds();
  fn();
  return now_seconds() - t0;
}

void report(const char* name, double serial, double parallel) {
  std::printf("%-28s serial %8.3fs   omp %8.3fs   speedup %.2fx\n", name, serial, parallel,
              serial / parallel);
}

}  // namespace

int main() {
  std::printf("worker pool: %d threads\n", max_threads());

  auto dyn = dynamics::builtin("pendulum");
  auto fit = pwa::fit_surrogate(dyn, 8, 1500, 7, {.epochs = 1500});
  auto surrogate = pwa::relu_to_pwa(fit.net, dyn.domain);
  std::printf("pendulum surrogate: %zu cells\n", surrogate.partition.cells.size());

  // batch evaluation
  {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> unif(-3.1, 3.1);
    Mat X(200000, 2);
    for (int i = 0; i < X.rows(); ++i) {
      X(i, 0) = unif(rng);
      X(i, 1) = unif(rng);
    }
    Mat a, b;
    double ts = time_once([&] { a = pwa::eval_batch_serial(surrogate, X); });
    double tp = time_once([&] { b = pwa::eval_batch(surrogate, X); });
    report("pwa eval (200k points)", ts, tp);
    if ((a - b).lpNorm<Eigen::Infinity>() != 0.0) std::printf("MISMATCH in eval batch!\n");
  }

  // synthesis + verification on the certified barrier
  synthesis::SynthesisConfig cfg;
  auto barrier = uis::uis_sweep(surrogate, {0.025, 0.05, 0.06}, cfg);
  auto patches = verify::facet_patches(barrier);
  std::printf("facet patches: %zu\n", patches.size());
  {
    std::vector<verify::VerificationOutcome> a, b;
    double ts = time_once([&] { a = verify::verify_patches_serial(dyn, patches, 8); });
    double tp = time_once([&] { b = verify::verify_patches(dyn, patches, 8); });
    report("facet verification", ts, tp);
    for (size_t i = 0; i < a.size(); ++i)
      if (a[i].phi_star != b[i].phi_star) std::printf("MISMATCH in verification!\n");
  }

  // batch closed-loop simulation
  {
    std::vector<Vec> starts;
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> unif(-0.4, 0.4);
    for (int i = 0; i < 64; ++i) {
      Vec x(2);
      x << unif(rng), unif(rng);
      starts.push_back(x);
    }
    auto controller = dynamics::cbf_qp_controller(dyn, barrier);
    dynamics::SimOptions opts{5.0, 1e-3};
    std::vector<dynamics::Trajectory> a, b;
    double ts = time_once([&] { a = dynamics::simulate_batch_serial(dyn, controller, starts, opts); });
    double tp = time_once([&] { b = dynamics::simulate_batch(dyn, controller, starts, opts); });
    report("simulation (64 x 5s)", ts, tp);
    for (size_t i = 0; i < a.size(); ++i)
      if ((a[i].points.back().x - b[i].points.back().x).lpNorm<Eigen::Infinity>() != 0.0)
        std::printf("MISMATCH in simulation!\n");
  }
  return 0;
}
