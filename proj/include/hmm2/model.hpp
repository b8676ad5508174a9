#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "hmm2/gmm.hpp"

namespace hmm2 {

enum class Topology { kErgodic, kLeftRight };

std::string_view to_string(Topology topology);
Topology parse_topology(std::string_view text);

// Whether a transition into `to` from `from` is admissible. Left-right
// chains never move backwards; skips are allowed.
inline bool transition_allowed(Topology topology, std::size_t from, std::size_t to) {
  return topology == Topology::kErgodic || to >= from;
}

// First-order continuous-density HMM: initial vector pi, transition matrix
// A (N x N, row-major) and one mixture per state.
struct Hmm1Model {
  Topology topology = Topology::kErgodic;
  std::vector<double> initial;
  std::vector<double> transitions;
  std::vector<GaussianMixture> states;
  std::map<std::string, std::string> metadata;

  std::size_t num_states() const { return states.size(); }
  std::size_t num_mixtures() const { return states.empty() ? 0 : states.front().components(); }
  std::size_t dim() const { return states.empty() ? 0 : states.front().dim; }

  double a(std::size_t i, std::size_t j) const { return transitions[i * num_states() + j]; }
  double& a(std::size_t i, std::size_t j) { return transitions[i * num_states() + j]; }

  // Throws DataError when shapes disagree or a stochastic constraint fails
  // by more than tol.
  void validate(double tol = 1e-10) const;
};

// Second-order continuous-density HMM. `initial` is Psi (state at t = 1),
// `first_step` the N x N matrix used for the t = 1 -> 2 transition, and
// `transitions` the N x N x N tensor a_ijk = P(q_t = k | q_{t-2} = i,
// q_{t-1} = j), stored with k fastest.
struct Hmm2Model {
  Topology topology = Topology::kErgodic;
  std::vector<double> initial;
  std::vector<double> first_step;
  std::vector<double> transitions;
  std::vector<GaussianMixture> states;
  std::map<std::string, std::string> metadata;

  std::size_t num_states() const { return states.size(); }
  std::size_t num_mixtures() const { return states.empty() ? 0 : states.front().components(); }
  std::size_t dim() const { return states.empty() ? 0 : states.front().dim; }

  double a2(std::size_t i, std::size_t j) const { return first_step[i * num_states() + j]; }
  double& a2(std::size_t i, std::size_t j) { return first_step[i * num_states() + j]; }
  double a3(std::size_t i, std::size_t j, std::size_t k) const {
    const std::size_t n = num_states();
    return transitions[(i * n + j) * n + k];
  }
  double& a3(std::size_t i, std::size_t j, std::size_t k) {
    const std::size_t n = num_states();
    return transitions[(i * n + j) * n + k];
  }

  void validate(double tol = 1e-10) const;
};

// Largest deviation from 1 over every probability vector in the model
// (initial, transition rows, mixture weights). Used by invariant checks.
double max_stochastic_error(const Hmm1Model& model);
double max_stochastic_error(const Hmm2Model& model);

// Embeds a first-order model as a second-order one with a_ijk = a_jk,
// first_step = A and Psi = pi. The two define the same distribution.
Hmm2Model lift_to_second_order(const Hmm1Model& model);

}  // namespace hmm2
