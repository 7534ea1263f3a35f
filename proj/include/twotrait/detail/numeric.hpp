#pragma once

#include <cmath>

namespace twotrait::detail {

// Cells this close below zero are floating cancellation, not real negatives.
inline constexpr double kClampTolerance = 1e-14;
// Slack on 1 - sum when deciding closed-simplex membership.
inline constexpr double kSumSlack = 1e-12;

inline double clamp_tiny_negative(double v) noexcept {
  return (v < 0.0 && v > -kClampTolerance) ? 0.0 : v;
}

/// x^k for integer k >= 0 by repeated squaring.
inline double ipow(double x, int k) noexcept {
  double result = 1.0;
  double base = x;
  for (unsigned e = static_cast<unsigned>(k); e != 0; e >>= 1) {
    if (e & 1u) result *= base;
    base *= base;
  }
  return result;
}

/// (j / n)^(1/k); the single expression shared by every plug-in estimator.
inline double kth_root(int j, int n, int k) noexcept {
  const double ratio = static_cast<double>(j) / static_cast<double>(n);
  return k == 1 ? ratio : std::pow(ratio, 1.0 / k);
}

}  // namespace twotrait::detail
