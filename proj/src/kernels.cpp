#include "hmm2/kernels.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>
#ifdef _OPENMP
#include <omp.h>
#endif

#include "hmm2/error.hpp"
#include "hmm2/logmath.hpp"

namespace hmm2 {

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

EmissionModel::EmissionModel(std::span<const GaussianMixture> states) {
  if (states.empty()) throw DataError("emission model needs at least one state");
  states_ = states.size();
  mixtures_ = states.front().components();
  dim_ = states.front().dim;
  log_const_.resize(states_ * mixtures_);
  means_.resize(states_ * mixtures_ * dim_);
  inv_var_.resize(states_ * mixtures_ * dim_);
  for (std::size_t k = 0; k < states_; ++k) {
    const auto& gmm = states[k];
    if (gmm.components() != mixtures_ || gmm.dim != dim_)
      throw DataError("all states must share mixture count and dimension");
    for (std::size_t m = 0; m < mixtures_; ++m) {
      const std::size_t cm = k * mixtures_ + m;
      double log_det = 0.0;
      for (std::size_t d = 0; d < dim_; ++d) {
        const double var = gmm.variance(m)[d];
        log_det += std::log(2.0 * std::numbers::pi * var);
        means_[cm * dim_ + d] = gmm.mean(m)[d];
        inv_var_[cm * dim_ + d] = 1.0 / var;
      }
      log_const_[cm] = safe_log(gmm.weights[m]) - 0.5 * log_det;
    }
  }
}

void EmissionModel::score_frame(std::span<const double> o, std::span<double> state_out,
                                std::span<double> component_out) const {
  for (std::size_t k = 0; k < states_; ++k) {
    double peak = kLogZero;
    for (std::size_t m = 0; m < mixtures_; ++m) {
      const std::size_t cm = k * mixtures_ + m;
      const double* mu = means_.data() + cm * dim_;
      const double* iv = inv_var_.data() + cm * dim_;
      double quad = 0.0;
      for (std::size_t d = 0; d < dim_; ++d) {
        const double diff = o[d] - mu[d];
        quad += diff * diff * iv[d];
      }
      const double value = log_const_[cm] - 0.5 * quad;
      component_out[cm] = value;
      if (value > peak) peak = value;
    }
    if (is_log_zero(peak)) {
      state_out[k] = kLogZero;
      continue;
    }
    double sum = 0.0;
    for (std::size_t m = 0; m < mixtures_; ++m) sum += std::exp(component_out[k * mixtures_ + m] - peak);
    state_out[k] = peak + std::log(sum);
  }
}

EmissionTable compute_emissions(const EmissionModel& model, const FeatureSequence& obs, bool keep_components,
                                Exec exec) {
  if (obs.dim() != model.dim())
    throw DataError(fmt::format("observations have dimension {}, model expects {}", obs.dim(), model.dim()));
  EmissionTable table;
  table.frames = obs.frames();
  table.states = model.num_states();
  table.mixtures = model.num_mixtures();
  table.state_log.resize(table.frames * table.states);
  const std::size_t per_frame = table.states * table.mixtures;
  if (keep_components) table.component_log.resize(table.frames * per_frame);

  const auto frames = static_cast<std::ptrdiff_t>(table.frames);
#pragma omp parallel if (exec == Exec::kParallel)
  {
    std::vector<double> scratch(keep_components ? 0 : per_frame);
#pragma omp for schedule(static)
    for (std::ptrdiff_t t = 0; t < frames; ++t) {
      const auto ut = static_cast<std::size_t>(t);
      std::span<double> comps = keep_components
                                    ? std::span<double>(table.component_log.data() + ut * per_frame, per_frame)
                                    : std::span<double>(scratch);
      model.score_frame(obs.row(ut), {table.state_log.data() + ut * table.states, table.states}, comps);
    }
  }
  return table;
}

namespace reference {

EmissionTable compute_emissions(std::span<const GaussianMixture> states, const FeatureSequence& obs) {
  EmissionTable table;
  table.frames = obs.frames();
  table.states = states.size();
  table.mixtures = states.empty() ? 0 : states.front().components();
  table.state_log.resize(table.frames * table.states);
  table.component_log.resize(table.frames * table.states * table.mixtures);
  for (std::size_t t = 0; t < table.frames; ++t) {
    for (std::size_t k = 0; k < table.states; ++k) {
      const auto& gmm = states[k];
      table.state_log[t * table.states + k] = gmm_log_density(gmm, obs.row(t));
      for (std::size_t m = 0; m < table.mixtures; ++m) {
        table.component_log[(t * table.states + k) * table.mixtures + m] =
            safe_log(gmm.weights[m]) + diag_gaussian_log_density(gmm.mean(m), gmm.variance(m), obs.row(t));
      }
    }
  }
  return table;
}

}  // namespace reference

}  // namespace hmm2
