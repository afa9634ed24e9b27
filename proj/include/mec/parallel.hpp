#pragma once
// Deterministic fork-join over an index range.  jobs <= 1 runs the plain
// serial loop (the reference path the tests compare against); jobs > 1 uses
// an OpenMP team when compiled with OpenMP and falls back to serial
// otherwise.  Work items must write only to their own output slot and must
// not throw (catch inside and record the failure in the slot), so the
// schedule cannot influence the result.
#include <functional>

namespace mec {

inline void run_points(int n, const std::function<void(int)>& work,
                       int jobs) {
#ifdef _OPENMP
  if (jobs > 1 && n > 1) {
#pragma omp parallel for schedule(dynamic) num_threads(jobs)
    for (int i = 0; i < n; ++i) work(i);
    return;
  }
#else
  (void)jobs;
#endif
  for (int i = 0; i < n; ++i) work(i);
}

}  // namespace mec
