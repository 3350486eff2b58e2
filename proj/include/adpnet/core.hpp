#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace adpnet {

using Vec = std::vector<double>;
using ConstPoint = std::span<const double>;

// Error hierarchy. Everything the library throws derives from Error so the
// CLI can map it to exit code 1.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ValidationError : Error {
  using Error::Error;
};

struct ParseError : Error {
  ParseError(const std::string &what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line(line) {}
  std::size_t line;
};

struct DegenerateGeometryError : Error {
  using Error::Error;
};

struct SingularIntegrandError : Error {
  SingularIntegrandError(std::size_t index)
      : Error("singular integrand: measure point " + std::to_string(index) +
              " lies on the network and p < 2"),
        index(index) {}
  std::size_t index;
};

struct MollificationError : Error {
  using Error::Error;
};

struct UnsupportedError : Error {
  using Error::Error;
};

inline double dot(ConstPoint a, ConstPoint b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

inline double norm_sq(ConstPoint a) { return dot(a, a); }
inline double norm(ConstPoint a) { return std::sqrt(norm_sq(a)); }

inline double dist_sq(ConstPoint a, ConstPoint b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

inline double dist(ConstPoint a, ConstPoint b) { return std::sqrt(dist_sq(a, b)); }

inline double norm_inf(ConstPoint a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

inline Vec sub(ConstPoint a, ConstPoint b) {
  Vec r(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) r[k] = a[k] - b[k];
  return r;
}

/// x^e with the convention 0^0 = 1 (std::pow already does this, but the
/// intent is worth keeping visible at call sites).
inline double pow0(double x, double e) {
  if (e == 0.0) return 1.0;
  return std::pow(x, e);
}

/// Worker count: hardware concurrency capped by ADPNET_THREADS.
inline unsigned worker_count() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char *env = std::getenv("ADPNET_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
  }
  return n;
}

/// Runs body(i) for i in [0, n) over contiguous chunks. Each index is written
/// by exactly one worker, so results are identical for any worker count.
template <class Body>
void parallel_for(std::size_t n, Body &&body, std::size_t min_chunk = 256) {
  const unsigned workers = worker_count();
  if (workers <= 1 || n < 2 * min_chunk) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  const std::size_t chunks = std::min<std::size_t>(workers, n / min_chunk);
  const std::size_t per = (n + chunks - 1) / chunks;
  std::vector<std::thread> pool;
  pool.reserve(chunks);
  for (std::size_t c = 0; c < chunks; ++c) {
    const std::size_t lo = c * per, hi = std::min(n, lo + per);
    pool.emplace_back([lo, hi, &body] {
      for (std::size_t i = lo; i < hi; ++i) body(i);
    });
  }
  for (auto &t : pool) t.join();
}

}  // namespace adpnet
