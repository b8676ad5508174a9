#pragma once

#include <cmath>
#include <limits>
#include <span>

namespace hmm2 {

// Canonical log(0). Propagates through additions and is absorbed by log_add.
inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

inline bool is_log_zero(double x) { return x == kLogZero; }

inline double safe_log(double p) { return p > 0.0 ? std::log(p) : kLogZero; }

// log(exp(a) + exp(b)) without overflow.
inline double log_add(double a, double b) {
  if (a < b) std::swap(a, b);
  if (is_log_zero(b)) return a;
  return a + std::log1p(std::exp(b - a));
}

// log(sum_i exp(x_i)); kLogZero for an empty or all-zero input.
double log_sum_exp(std::span<const double> xs);

}  // namespace hmm2
