#pragma once

#include <atomic>
#include <cstddef>
#include <utility>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ssvep {

enum class Exec { serial, parallel };

// Process-wide default execution mode. Kernels that take no explicit Exec
// argument pick this up; tests and the single-threaded acceptance runs flip
// it to Exec::serial.
inline std::atomic<Exec>& default_exec_ref() {
  static std::atomic<Exec> mode{Exec::parallel};
  return mode;
}
inline Exec default_exec() { return default_exec_ref().load(); }
inline void set_default_exec(Exec e) { default_exec_ref().store(e); }

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// Runs fn(i) for i in [0, n). Iterations must write disjoint outputs; under
// that contract results are identical in both modes regardless of thread
// count, which the tests assert bit-exactly.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn, Exec exec = default_exec()) {
#ifdef _OPENMP
  if (exec == Exec::parallel && n > 1) {
#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < static_cast<long long>(n); ++i)
      fn(static_cast<std::size_t>(i));
    return;
  }
#endif
  for (std::size_t i = 0; i < n; ++i) fn(i);
}

}  // namespace ssvep
