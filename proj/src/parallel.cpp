#include "pwacert/parallel.hpp"

#include <cstdlib>
#include <string>

#ifdef PWACERT_HAVE_OPENMP
#include <omp.h>
#endif

namespace pwacert {

int max_threads() {
  if (const char* env = std::getenv("PWACERT_THREADS")) {
    int k = std::atoi(env);
    if (k >= 1) return k;
  }
#ifdef PWACERT_HAVE_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void parallel_for(int n, const std::function<void(int)>& fn, bool parallel) {
#ifdef PWACERT_HAVE_OPENMP
  const int k = parallel ? max_threads() : 1;
  if (k > 1 && n > 1) {
#pragma omp parallel for schedule(dynamic) num_threads(k)
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
#else
  (void)parallel;
#endif
  for (int i = 0; i < n; ++i) fn(i);
}

}  // namespace pwacert
