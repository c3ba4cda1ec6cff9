#pragma once

#include <cmath>
#include <limits>
#include <numbers>

namespace parisian {

struct GaussTail {
  double tail;     ///< Ψ(x) = P(N(0,1) > x)
  double density;  ///< φ(x)
};

inline constexpr double inv_sqrt_2pi = 0.398942280401432677939946059934;

inline double gauss_pdf(double x) { return inv_sqrt_2pi * std::exp(-0.5 * x * x); }

inline double gauss_log_pdf(double x) {
  return -0.5 * x * x - 0.918938533204672741780329736406;  // log √(2π)
}

/// Ψ(x). Accurate to a few ulp wherever the result is a normal double.
inline double gauss_sf(double x) {
  if (x < 0) return 1.0 - 0.5 * std::erfc(-x * std::numbers::sqrt2 * 0.5);
  return 0.5 * std::erfc(x * std::numbers::sqrt2 * 0.5);
}

inline double gauss_cdf(double x) { return gauss_sf(-x); }

inline GaussTail gauss_tail(double x) { return {gauss_sf(x), gauss_pdf(x)}; }

namespace detail {

// Backward evaluation of D_k = 1 / (x + k D_{k+1}); D_1 is the Mills ratio,
// D_2 the tail of the same continued fraction.
struct MillsFraction {
  double d1;
  double d2;
};

inline MillsFraction mills_fraction(double x) {
  double d = 0.0;
  double d2 = 0.0;
  for (int k = 240; k >= 1; --k) {
    d = 1.0 / (x + k * d);
    if (k == 2) d2 = d;
  }
  return {d, d2};
}

inline constexpr double kMillsSwitch = 2.5;

}  // namespace detail

/// Mills ratio Ψ(x)/φ(x).
inline double mills_ratio(double x) {
  if (x >= detail::kMillsSwitch) return detail::mills_fraction(x).d1;
  return gauss_sf(x) / gauss_pdf(x);
}

/// log Ψ(x), finite for every finite x.
inline double gauss_log_sf(double x) {
  if (x > 8.0) return gauss_log_pdf(x) + std::log(detail::mills_fraction(x).d1);
  if (x < -8.0) return std::log1p(-gauss_sf(-x));
  return std::log(gauss_sf(x));
}

/// φ(x) − xΨ(x), without cancellation for large positive x.
inline double gauss_partial_expectation(double x) {
  if (x >= detail::kMillsSwitch) {
    const auto f = detail::mills_fraction(x);
    return gauss_pdf(x) * f.d1 * f.d2;
  }
  return gauss_pdf(x) - x * gauss_sf(x);
}

}  // namespace parisian
