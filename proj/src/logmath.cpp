#include "hmm2/logmath.hpp"

#include <algorithm>

namespace hmm2 {

double log_sum_exp(std::span<const double> xs) {
  if (xs.empty()) return kLogZero;
  const double peak = *std::max_element(xs.begin(), xs.end());
  if (is_log_zero(peak)) return kLogZero;
  if (std::isinf(peak)) return peak;
  double sum = 0.0;
  for (double x : xs) sum += std::exp(x - peak);
  return peak + std::log(sum);
}

}  // namespace hmm2
