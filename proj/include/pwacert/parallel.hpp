#pragma once

#include <functional>

namespace pwacert {

// Worker pool size: PWACERT_THREADS if set, otherwise the OpenMP default.
int max_threads();

// Runs fn(i) for i in [0, n). Items must be independent; results written by
// index stay bitwise identical whatever the thread count. With `parallel`
// false (or no OpenMP) this is the plain serial loop.
void parallel_for(int n, const std::function<void(int)>& fn, bool parallel = true);

}  // namespace pwacert
