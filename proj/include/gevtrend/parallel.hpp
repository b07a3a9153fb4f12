#pragma once

#include <cstddef>
#include <vector>

#include <omp.h>

namespace gevtrend {

enum class Execution { Serial, Parallel };

/// Evaluates fn(i) for i in [0, n) and stores results by index. The parallel path
/// uses an OpenMP work-sharing loop; the serial path is the reference the tests
/// compare against. Output order never depends on scheduling.
template <class Fn>
auto parallel_map(std::size_t n, Fn&& fn, Execution exec = Execution::Parallel, int workers = 0)
    -> std::vector<decltype(fn(std::size_t{}))> {
  using Result = decltype(fn(std::size_t{}));
  std::vector<Result> out(n);
  if (exec == Execution::Serial || n < 2) {
    for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
    return out;
  }
  const int threads = workers > 0 ? workers : omp_get_max_threads();
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (long long i = 0; i < count; ++i) {
    out[static_cast<std::size_t>(i)] = fn(static_cast<std::size_t>(i));
  }
  return out;
}

inline Execution execution_for(int workers) {
  return workers == 1 ? Execution::Serial : Execution::Parallel;
}

}  // namespace gevtrend
