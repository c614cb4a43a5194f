#pragma once

#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace geoinv {

/// Carries the first exception out of an OpenMP region, where throwing
/// across the parallel boundary would terminate.
class WorkerError {
 public:
  template <typename F>
  void run(F&& body) noexcept {
    try {
      body();
    } catch (...) {
      const std::lock_guard<std::mutex> lock(mutex_);
      if (!first_) first_ = std::current_exception();
    }
  }
  void rethrow_if_any() {
    if (first_) std::rethrow_exception(first_);
  }

 private:
  std::mutex mutex_;
  std::exception_ptr first_;
};

/// Worker cap: GEOINV_THREADS, else the OpenMP default. Returns 1 when built
/// without OpenMP.
inline int worker_count() {
#ifdef _OPENMP
  int n = omp_get_max_threads();
  if (const char* env = std::getenv("GEOINV_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0 && cap < n) n = cap;
  }
  return n > 0 ? n : 1;
#else
  return 1;
#endif
}

/// Threads to use for a job: `requested` if positive, else the global cap;
/// strict mode pins everything to one worker.
inline int effective_threads(int requested, bool strict) {
  if (strict) return 1;
  if (requested > 0) return requested;
  return worker_count();
}

}  // namespace geoinv
