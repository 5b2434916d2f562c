#pragma once

#include <complex>
#include <cstdlib>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace cqlab {

using cplx = std::complex<double>;

inline constexpr double pi = 3.14159265358979323846;

/// Invalid configuration or precondition violation (CLI exit code 2).
class config_error : public std::invalid_argument {
 public:
  explicit config_error(const std::string& what) : std::invalid_argument(what) {}
};

/// Numerical failure during a run (CLI exit code 3).
class numerical_error : public std::runtime_error {
 public:
  explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

/// Worker count: CQLAB_THREADS if set, else hardware concurrency.
inline unsigned thread_count() {
  if (const char* env = std::getenv("CQLAB_THREADS")) {
    long v = std::atol(env);
    if (v >= 1) return static_cast<unsigned>(v);
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : hc;
}

/// Runs body(i) for i in [0, n). Each index must write only its own output
/// slot; any reduction is done by the caller afterwards, in index order, so
/// results do not depend on the number of threads.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  unsigned workers = thread_count();
  if (workers <= 1 || n < 2 * workers) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::size_t chunk = (n + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    std::size_t lo = w * chunk, hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &body] {
      for (std::size_t i = lo; i < hi; ++i) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace cqlab
