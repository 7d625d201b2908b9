#pragma once

#include <cmath>

#include <boost/math/special_functions/erf.hpp>

namespace platctl {

inline constexpr double kInvSqrt2 = 0.70710678118654752440;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;

inline double norm_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

/// Upper tail P(X > x), accurate far into the right tail.
inline double norm_sf(double x) { return 0.5 * std::erfc(x * kInvSqrt2); }

/// Standard normal quantile; p is clamped to the open unit interval.
inline double norm_quantile(double p) {
  constexpr double kTiny = 1e-300;
  if (p <= kTiny) p = kTiny;
  if (p >= 1.0 - 1e-16) p = 1.0 - 1e-16;
  return -1.4142135623730950488 * boost::math::erfc_inv(2.0 * p);
}

}  // namespace platctl
