#pragma once

#include <cmath>
#include <numbers>

namespace cirbo::normal {

inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;

[[nodiscard]] inline double pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

[[nodiscard]] inline double cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// log Phi(x). Deep in the lower tail, where erfc would underflow, switches to the
/// asymptotic series -x^2/2 - log(-x sqrt(2 pi)) + log(1 - 1/x^2 + 3/x^4 - 15/x^6 + 105/x^8 - 945/x^10).
[[nodiscard]] inline double log_cdf(double x) {
  if (x < -30.0) {
    const double t = 1.0 / (x * x);
    const double series = t * (-1.0 + t * (3.0 + t * (-15.0 + t * (105.0 - 945.0 * t))));
    return -0.5 * x * x - std::log(-x) - kLogSqrt2Pi + std::log1p(series);
  }
  if (x > 0.0) {
    return std::log1p(-0.5 * std::erfc(x / std::numbers::sqrt2));
  }
  return std::log(cdf(x));
}

[[nodiscard]] inline double log_pdf(double x) { return -0.5 * x * x - kLogSqrt2Pi; }

}  // namespace cirbo::normal
