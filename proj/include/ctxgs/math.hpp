#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ctxgs::math {

inline constexpr double kLn2 = std::numbers::ln2;
inline constexpr double kInvSqrt2 = 0.70710678118654752440;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;

inline double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

/// sigmoid'(x) = sigmoid(x) * sigmoid(-x), without cancellation in the tails.
inline double sigmoid_grad(double x) { return sigmoid(x) * sigmoid(-x); }

inline double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

/// Phi(hi) - Phi(lo) evaluated on the tail that avoids cancellation.
inline double normal_mass(double lo, double hi) {
  if (lo > 0.0) return 0.5 * (std::erfc(lo * kInvSqrt2) - std::erfc(hi * kInvSqrt2));
  return 0.5 * (std::erfc(-hi * kInvSqrt2) - std::erfc(-lo * kInvSqrt2));
}

/// Rounds half away from zero.
inline double round_half_away(double x) { return std::round(x); }

}  // namespace ctxgs::math
