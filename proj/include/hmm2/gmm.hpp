#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace hmm2 {

// Diagonal-covariance Gaussian mixture: weights c_m, means mu_m and
// variances sigma^2_m, each mean/variance block of length dim.
struct GaussianMixture {
  std::size_t dim = 0;
  std::vector<double> weights;
  std::vector<double> means;      // components x dim, row-major
  std::vector<double> variances;  // components x dim, row-major

  GaussianMixture() = default;
  GaussianMixture(std::size_t components, std::size_t dim);

  std::size_t components() const { return weights.size(); }
  std::span<const double> mean(std::size_t m) const { return {means.data() + m * dim, dim}; }
  std::span<double> mean(std::size_t m) { return {means.data() + m * dim, dim}; }
  std::span<const double> variance(std::size_t m) const { return {variances.data() + m * dim, dim}; }
  std::span<double> variance(std::size_t m) { return {variances.data() + m * dim, dim}; }

  // Weights non-negative and summing to 1 within tol; variances positive.
  void validate(double tol = 1e-10) const;
};

// log N(o; mu, diag(var)).
double diag_gaussian_log_density(std::span<const double> mean, std::span<const double> variance,
                                 std::span<const double> o);

// log sum_m c_m N(o; mu_m, diag(var_m)), evaluated with log-sum-exp.
double gmm_log_density(const GaussianMixture& gmm, std::span<const double> o);

// Maximizes sum_i counts[i] log p[i] subject to p[i] >= floor and
// sum p = 1, over the entries where allowed[i] is nonzero (others are 0). With
// floor = 0 this is plain normalization. Returns false, leaving out
// untouched, when the allowed counts sum to zero.
bool floored_normalize(std::span<const double> counts, std::span<const std::uint8_t> allowed, double floor,
                       std::span<double> out);

}  // namespace hmm2
