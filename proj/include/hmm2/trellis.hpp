#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hmm2/features.hpp"
#include "hmm2/kernels.hpp"
#include "hmm2/model.hpp"

namespace hmm2 {

// Log-domain copies of a model's transition parameters.
struct LogParams2 {
  std::size_t states = 0;
  std::vector<double> initial;
  std::vector<double> first_step;
  std::vector<double> transitions;

  explicit LogParams2(const Hmm2Model& model);
  double a2(std::size_t j, std::size_t k) const { return first_step[j * states + k]; }
  double a3(std::size_t i, std::size_t j, std::size_t k) const {
    return transitions[(i * states + j) * states + k];
  }
};

struct LogParams1 {
  std::size_t states = 0;
  std::vector<double> initial;
  std::vector<double> transitions;

  explicit LogParams1(const Hmm1Model& model);
  double a(std::size_t j, std::size_t k) const { return transitions[j * states + k]; }
};

// Pair-indexed lattice over frames. Frames are 0-based: entry (t, j, k)
// refers to q_{t-1} = j, q_t = k and is defined for 1 <= t < T. Entries at
// t = 0 hold kLogZero. `backpointers` is filled only by viterbi2.
struct Trellis2 {
  std::size_t frames = 0;
  std::size_t states = 0;
  std::vector<double> values;
  std::vector<int> backpointers;
  double log_likelihood = 0.0;

  double at(std::size_t t, std::size_t j, std::size_t k) const { return values[(t * states + j) * states + k]; }
  double& at(std::size_t t, std::size_t j, std::size_t k) { return values[(t * states + j) * states + k]; }
};

struct Trellis1 {
  std::size_t frames = 0;
  std::size_t states = 0;
  std::vector<double> values;
  double log_likelihood = 0.0;

  double at(std::size_t t, std::size_t j) const { return values[t * states + j]; }
  double& at(std::size_t t, std::size_t j) { return values[t * states + j]; }
};

struct ViterbiPath {
  std::vector<int> states;  // 0-based state per frame
  double log_score = 0.0;
};

// Second order. All require T >= 2.
Trellis2 forward2(const LogParams2& params, const EmissionTable& emissions);
Trellis2 forward2(const Hmm2Model& model, const FeatureSequence& obs);
Trellis2 backward2(const LogParams2& params, const EmissionTable& emissions);
Trellis2 backward2(const Hmm2Model& model, const FeatureSequence& obs);
// Throws NumericError when every complete path has probability zero.
ViterbiPath viterbi2(const LogParams2& params, const EmissionTable& emissions);
ViterbiPath viterbi2(const Hmm2Model& model, const FeatureSequence& obs);

// log P(Q) for a state sequence (no emissions).
double path_log_prob2(const Hmm2Model& model, std::span<const int> states);
// log P(Q, O).
double path_log_prob2(const Hmm2Model& model, std::span<const int> states, const FeatureSequence& obs);

// First order. forward1/viterbi1 require T >= 1.
Trellis1 forward1(const LogParams1& params, const EmissionTable& emissions);
Trellis1 forward1(const Hmm1Model& model, const FeatureSequence& obs);
Trellis1 backward1(const LogParams1& params, const EmissionTable& emissions);
Trellis1 backward1(const Hmm1Model& model, const FeatureSequence& obs);
ViterbiPath viterbi1(const LogParams1& params, const EmissionTable& emissions);
ViterbiPath viterbi1(const Hmm1Model& model, const FeatureSequence& obs);

double path_log_prob1(const Hmm1Model& model, std::span<const int> states);
double path_log_prob1(const Hmm1Model& model, std::span<const int> states, const FeatureSequence& obs);

}  // namespace hmm2
