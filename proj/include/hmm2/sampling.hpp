#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "hmm2/features.hpp"
#include "hmm2/model.hpp"

namespace hmm2 {

struct Sample {
  std::vector<int> states;
  FeatureSequence observations;
};

// Draws q_1 ~ Psi, q_2 ~ first_step(q_1, .), q_t ~ a(q_{t-2}, q_{t-1}, .)
// and O_t from state q_t's mixture. Deterministic for a given seed.
Sample sample_hmm2(const Hmm2Model& model, std::size_t frames, std::uint64_t seed);

Sample sample_hmm1(const Hmm1Model& model, std::size_t frames, std::uint64_t seed);

}  // namespace hmm2
