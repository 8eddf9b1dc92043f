#pragma once

#include <cstddef>
#include <exception>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dalab {

/// Selects the sample-loop kernel. Both produce identical results: each index is
/// computed independently and merged by index.
enum class Execution { serial, parallel };

/// Evaluates fn(i) for i in [0, n) into a vector. Exceptions thrown inside the
/// loop are captured and the one with the lowest index is rethrown.
template <class T, class Fn>
std::vector<T> indexed_map(std::size_t n, Fn&& fn, Execution exec = Execution::parallel) {
  std::vector<T> out(n);
  std::vector<std::exception_ptr> errors(n);
  if (exec == Execution::serial) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        out[i] = fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    const long long count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 1)
    for (long long i = 0; i < count; ++i) {
      try {
        out[static_cast<std::size_t>(i)] = fn(static_cast<std::size_t>(i));
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

inline void set_thread_count(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

inline int thread_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace dalab
