#include "hmm2/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "hmm2/error.hpp"
#include "hmm2/logmath.hpp"

namespace hmm2 {

GaussianMixture::GaussianMixture(std::size_t components, std::size_t dim)
    : dim(dim),
      weights(components, components ? 1.0 / static_cast<double>(components) : 0.0),
      means(components * dim, 0.0),
      variances(components * dim, 1.0) {}

void GaussianMixture::validate(double tol) const {
  if (weights.empty() || dim == 0) throw DataError("mixture needs at least one component and D >= 1");
  if (means.size() != weights.size() * dim || variances.size() != weights.size() * dim)
    throw DataError("mixture parameter blocks have inconsistent sizes");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw DataError("mixture weight is negative");
    total += w;
  }
  if (std::abs(total - 1.0) > tol) throw DataError(fmt::format("mixture weights sum to {}", total));
  for (double v : variances) {
    if (!(v > 0.0) || !std::isfinite(v)) throw DataError("mixture variance must be positive and finite");
  }
  for (double m : means) {
    if (!std::isfinite(m)) throw DataError("mixture mean is not finite");
  }
}

double diag_gaussian_log_density(std::span<const double> mean, std::span<const double> variance,
                                 std::span<const double> o) {
  double acc = 0.0;
  for (std::size_t d = 0; d < o.size(); ++d) {
    const double diff = o[d] - mean[d];
    acc += std::log(2.0 * std::numbers::pi * variance[d]) + diff * diff / variance[d];
  }
  return -0.5 * acc;
}

double gmm_log_density(const GaussianMixture& gmm, std::span<const double> o) {
  if (o.size() != gmm.dim)
    throw DataError(fmt::format("observation has dimension {}, mixture expects {}", o.size(), gmm.dim));
  std::vector<double> terms(gmm.components());
  for (std::size_t m = 0; m < gmm.components(); ++m)
    terms[m] = safe_log(gmm.weights[m]) + diag_gaussian_log_density(gmm.mean(m), gmm.variance(m), o);
  return log_sum_exp(terms);
}

bool floored_normalize(std::span<const double> counts, std::span<const std::uint8_t> allowed, double floor,
                       std::span<double> out) {
  const std::size_t n = counts.size();
  double total = 0.0;
  std::size_t open = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (allowed[i]) {
      total += counts[i];
      ++open;
    }
  }
  if (!(total > 0.0) || open == 0) return false;
  if (floor * static_cast<double>(open) >= 1.0) floor = 0.0;

  // Water-filling: entries whose proportional share would drop below the
  // floor are pinned to it and the remaining mass is shared among the rest.
  std::vector<bool> pinned(n, false);
  for (;;) {
    double free_counts = 0.0;
    std::size_t pinned_count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!allowed[i]) continue;
      if (pinned[i])
        ++pinned_count;
      else
        free_counts += counts[i];
    }
    const double free_mass = 1.0 - floor * static_cast<double>(pinned_count);
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (!allowed[i] || pinned[i]) continue;
      const double share = free_counts > 0.0 ? free_mass * counts[i] / free_counts : 0.0;
      if (share < floor) {
        pinned[i] = true;
        changed = true;
      }
    }
    if (!changed) {
      for (std::size_t i = 0; i < n; ++i) {
        if (!allowed[i])
          out[i] = 0.0;
        else if (pinned[i])
          out[i] = floor;
        else
          out[i] = free_mass * counts[i] / free_counts;
      }
      return true;
    }
  }
}

}  // namespace hmm2
