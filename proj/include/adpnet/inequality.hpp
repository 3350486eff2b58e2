#pragma once

#include <utility>

#include "core.hpp"

namespace adpnet {

/// Bounds (p/q)(a^q - b^q) b^{p-q} <= a^p - b^p <= (p/q)(a^q - b^q) a^{p-q}
/// for a, b >= 0 and p >= q > 0, with 0^0 = 1.
inline std::pair<double, double> power_bounds(double a, double b, double p, double q) {
  if (!(q > 0.0) || p < q) throw ValidationError("power_bounds needs p >= q > 0");
  if (a < 0.0 || b < 0.0) throw ValidationError("power_bounds needs a, b >= 0");
  const double diff = (p / q) * (pow0(a, q) - pow0(b, q));
  return {diff * pow0(b, p - q), diff * pow0(a, p - q)};
}

/// True when a^p - b^p lies inside power_bounds up to rel_tol (relative to the
/// largest magnitude involved).
inline bool power_bounds_hold(double a, double b, double p, double q, double rel_tol = 1e-9) {
  const auto [lo, hi] = power_bounds(a, b, p, q);
  const double v = pow0(a, p) - pow0(b, p);
  const double scale = std::max({1.0, std::abs(lo), std::abs(hi), pow0(a, p), pow0(b, p)});
  return lo <= v + rel_tol * scale && v <= hi + rel_tol * scale;
}

}  // namespace adpnet
