#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "hmm2/features.hpp"
#include "hmm2/kernels.hpp"
#include "hmm2/model.hpp"

namespace hmm2 {

struct TrainConfig {
  std::size_t max_iterations = 40;
  // Stop when (L_new - L_old) / |L_old| falls below this.
  double tolerance = 1e-5;
  // Per-dimension variance floor = max(factor * corpus variance, minimum).
  double variance_floor_factor = 1e-3;
  double variance_floor_min = 1e-6;
  double weight_floor = 1e-6;
  double transition_floor = 0.0;
  std::uint64_t seed = 0;
  // Ergodic initialization keeps the best of this many state clusterings.
  std::size_t init_restarts = 8;
  // Keep the initial vector and first-step matrix fixed during training.
  bool freeze_initials = false;
  Exec exec = Exec::kParallel;

  void validate() const;
};

// A state, or one component of a state (component == -1 means the whole
// state), that received no posterior mass in an iteration and kept its
// previous parameters.
struct ZeroOccupancy {
  std::size_t iteration = 0;
  std::size_t state = 0;
  int component = -1;
};

template <class Model>
struct TrainResult {
  Model model;
  // trace[i] is the total corpus log-likelihood of the model entering
  // iteration i; the last entry belongs to the returned model.
  std::vector<double> trace;
  std::size_t iterations = 0;  // completed re-estimation steps
  bool converged = false;
  std::vector<ZeroOccupancy> zero_occupancy;
};

template <class Model>
using IterationObserver = std::function<void(std::size_t iteration, const Model& updated)>;

// Weighted zeroth/first/second moments per (state, component). Moments are
// taken about `shift` (the current means) for numerical stability.
struct MixtureStats {
  std::size_t states = 0;
  std::size_t mixtures = 0;
  std::size_t dim = 0;
  std::vector<double> occupancy;
  std::vector<double> shift;
  std::vector<double> first;
  std::vector<double> second;

  MixtureStats() = default;
  MixtureStats(std::span<const GaussianMixture> mixtures);
  void add(const MixtureStats& other);
};

struct Stats2 {
  MixtureStats mixtures;
  std::vector<double> initial;
  std::vector<double> first_step;
  std::vector<double> transitions;
  double log_likelihood = 0.0;

  explicit Stats2(const Hmm2Model& model);
  void add(const Stats2& other);
};

struct Stats1 {
  MixtureStats mixtures;
  std::vector<double> initial;
  std::vector<double> transitions;
  double log_likelihood = 0.0;

  explicit Stats1(const Hmm1Model& model);
  void add(const Stats1& other);
};

// Expected sufficient statistics over a corpus. Each sequence is processed
// independently and the per-sequence results are summed in corpus order,
// so kSerial and kParallel agree bit for bit.
Stats2 expectation2(const Hmm2Model& model, std::span<const FeatureSequence> corpus, Exec exec);
Stats1 expectation1(const Hmm1Model& model, std::span<const FeatureSequence> corpus, Exec exec);

namespace reference {

// Straight serial accumulation into one set of statistics.
Stats2 expectation2(const Hmm2Model& model, std::span<const FeatureSequence> corpus);
Stats1 expectation1(const Hmm1Model& model, std::span<const FeatureSequence> corpus);

}  // namespace reference

// Per-dimension variance floor for a corpus under cfg.
std::vector<double> variance_floor(std::span<const FeatureSequence> corpus, const TrainConfig& cfg);

// Extended Baum-Welch for the second-order model. Requires T >= 3 for every
// sequence.
TrainResult<Hmm2Model> baum_welch2(const Hmm2Model& initial, std::span<const FeatureSequence> corpus,
                                   const TrainConfig& cfg, const IterationObserver<Hmm2Model>& observer = {});

// Standard Baum-Welch for the first-order baseline. Requires T >= 2.
TrainResult<Hmm1Model> baum_welch1(const Hmm1Model& initial, std::span<const FeatureSequence> corpus,
                                   const TrainConfig& cfg, const IterationObserver<Hmm1Model>& observer = {});

// Flat-start initialization. Left-right models segment every sequence
// linearly across the states; ergodic models assign frames to states by
// k-means over the pooled corpus (best of several seedings). Each state's frames are then clustered
// into M components (seeded k-means, 10 iterations) to set means, variances
// and weights. Transition parameters are uniform over admissible successors.
Hmm2Model init_model2(std::span<const FeatureSequence> corpus, std::size_t states, std::size_t mixtures,
                      Topology topology, std::uint64_t seed, const TrainConfig& cfg = {});
Hmm1Model init_model1(std::span<const FeatureSequence> corpus, std::size_t states, std::size_t mixtures,
                      Topology topology, std::uint64_t seed, const TrainConfig& cfg = {});

// Seeded k-means (k-means++ seeding, fixed iteration count). Returns centers
// (k x dim, row-major) and assigns each point a cluster.
struct KMeansResult {
  std::vector<double> centers;
  std::vector<std::size_t> assignment;
  double inertia = 0.0;  // sum of squared distances to the assigned centers
};
KMeansResult kmeans(std::span<const std::span<const double>> points, std::size_t dim, std::size_t k,
                    std::uint64_t seed, std::size_t iterations);

}  // namespace hmm2
