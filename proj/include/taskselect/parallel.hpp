#pragma once

// Index-parallel map used for independent work items (experiment seeds,
// CMA-ES candidates, Monte Carlo replicates). Results land in index order so
// the parallel and serial paths produce identical output for pure work items.

#include <cstddef>
#include <exception>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace taskselect {

enum class Execution { serial, parallel };

/// Reference implementation: plain loop.
template <class T, class Fn>
std::vector<T> serial_map(std::size_t n, Fn&& fn) {
  std::vector<T> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(fn(i));
  return out;
}

/// OpenMP version. An exception from any item is rethrown after the loop;
/// when several items throw, the one with the lowest index wins.
template <class T, class Fn>
std::vector<T> parallel_map(std::size_t n, Fn&& fn) {
  std::vector<T> out(n);
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic)
  for (long long i = 0; i < count; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = fn(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

template <class T, class Fn>
std::vector<T> map_indices(Execution exec, std::size_t n, Fn&& fn) {
  if (exec == Execution::parallel) return parallel_map<T>(n, std::forward<Fn>(fn));
  return serial_map<T>(n, std::forward<Fn>(fn));
}

inline int worker_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace taskselect
