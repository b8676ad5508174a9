#include "hmm2/sampling.hpp"

#include <cmath>
#include <span>

#include "hmm2/error.hpp"
#include "hmm2/random.hpp"

namespace hmm2 {

namespace {

void emit(const GaussianMixture& gmm, Rng& rng, std::span<double> out) {
  const std::size_t m = rng.categorical(gmm.weights);
  const auto mean = gmm.mean(m);
  const auto var = gmm.variance(m);
  for (std::size_t d = 0; d < out.size(); ++d) out[d] = mean[d] + std::sqrt(var[d]) * rng.normal();
}

}  // namespace

Sample sample_hmm2(const Hmm2Model& model, std::size_t frames, std::uint64_t seed) {
  if (frames < 2) throw DataError("second-order sampling needs T >= 2");
  const std::size_t n = model.num_states();
  Rng rng(seed);
  Sample out;
  out.states.resize(frames);
  out.observations = FeatureSequence(frames, model.dim());

  auto draw = [&](std::span<const double> row) { return static_cast<int>(rng.categorical(row)); };
  out.states[0] = draw(model.initial);
  out.states[1] = draw({model.first_step.data() + static_cast<std::size_t>(out.states[0]) * n, n});
  for (std::size_t t = 2; t < frames; ++t) {
    const auto i = static_cast<std::size_t>(out.states[t - 2]);
    const auto j = static_cast<std::size_t>(out.states[t - 1]);
    out.states[t] = draw({model.transitions.data() + (i * n + j) * n, n});
  }
  for (std::size_t t = 0; t < frames; ++t)
    emit(model.states[static_cast<std::size_t>(out.states[t])], rng, out.observations.row(t));
  return out;
}

Sample sample_hmm1(const Hmm1Model& model, std::size_t frames, std::uint64_t seed) {
  if (frames < 1) throw DataError("sampling needs T >= 1");
  const std::size_t n = model.num_states();
  Rng rng(seed);
  Sample out;
  out.states.resize(frames);
  out.observations = FeatureSequence(frames, model.dim());

  out.states[0] = static_cast<int>(rng.categorical(model.initial));
  for (std::size_t t = 1; t < frames; ++t) {
    const auto j = static_cast<std::size_t>(out.states[t - 1]);
    out.states[t] = static_cast<int>(rng.categorical({model.transitions.data() + j * n, n}));
  }
  for (std::size_t t = 0; t < frames; ++t)
    emit(model.states[static_cast<std::size_t>(out.states[t])], rng, out.observations.row(t));
  return out;
}

}  // namespace hmm2
