#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hmm2/features.hpp"
#include "hmm2/gmm.hpp"

namespace hmm2 {

// Execution policy for the data-parallel kernels. kParallel distributes
// independent work items (frames, sequences, utterances, models) over
// OpenMP threads; results are bit-identical to kSerial because every
// reduction is performed in a fixed order.
enum class Exec { kSerial, kParallel };

// Per-state mixtures rearranged for repeated evaluation: log weights,
// log normalizers and inverse variances are precomputed.
class EmissionModel {
 public:
  explicit EmissionModel(std::span<const GaussianMixture> states);

  std::size_t num_states() const { return states_; }
  std::size_t num_mixtures() const { return mixtures_; }
  std::size_t dim() const { return dim_; }

  // Fills component_out[k * M + m] = log c_km + log N(o; mu_km, var_km) and
  // state_out[k] = log b_k(o).
  void score_frame(std::span<const double> o, std::span<double> state_out,
                   std::span<double> component_out) const;

 private:
  std::size_t states_ = 0;
  std::size_t mixtures_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> log_const_;  // log c_km - 0.5 sum_d log(2 pi var)
  std::vector<double> means_;
  std::vector<double> inv_var_;
};

// Log emission likelihoods for one sequence: state_log is T x N, and
// component_log (optional) is T x N x M.
struct EmissionTable {
  std::size_t frames = 0;
  std::size_t states = 0;
  std::size_t mixtures = 0;
  std::vector<double> state_log;
  std::vector<double> component_log;

  double b(std::size_t t, std::size_t k) const { return state_log[t * states + k]; }
  std::span<const double> frame(std::size_t t) const { return {state_log.data() + t * states, states}; }
  std::span<const double> components(std::size_t t, std::size_t k) const {
    return {component_log.data() + (t * states + k) * mixtures, mixtures};
  }
};

EmissionTable compute_emissions(const EmissionModel& model, const FeatureSequence& obs,
                                bool keep_components, Exec exec = Exec::kParallel);

namespace reference {

// Direct per-frame evaluation through gmm_log_density; kept as the serial
// oracle for compute_emissions.
EmissionTable compute_emissions(std::span<const GaussianMixture> states, const FeatureSequence& obs);

}  // namespace reference

// Number of OpenMP threads a kParallel region would use.
int max_threads();

}  // namespace hmm2
