// Execution policy for data-parallel kernels.
//
// Every parallel kernel in the library has the same structure: independent
// loop bodies writing to disjoint slots, with any randomness pre-derived per
// index. Exec::serial runs the plain reference loop; Exec::openmp runs the
// same bodies under OpenMP. Both produce bitwise-identical results.

#pragma once

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace rbci::exec {

enum class Exec { serial, openmp };

template <class Body>
void for_each_index(int n, Exec mode, Body&& body) {
  if (mode == Exec::serial) {
    for (int k = 0; k < n; ++k) body(k);
    return;
  }
#if defined(_OPENMP)
#pragma omp parallel for schedule(static)
  for (int k = 0; k < n; ++k) body(k);
#else
  for (int k = 0; k < n; ++k) body(k);
#endif
}

inline int max_threads() {
#if defined(_OPENMP)
  return omp_get_max_threads();
#else
  return 1;
#endif
}

inline void set_threads(int n) {
#if defined(_OPENMP)
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

}  // namespace rbci::exec
