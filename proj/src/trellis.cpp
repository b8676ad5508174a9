#include "hmm2/trellis.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "hmm2/error.hpp"
#include "hmm2/logmath.hpp"

namespace hmm2 {

namespace {

std::vector<double> log_of(const std::vector<double>& values) {
  std::vector<double> out(values.size());
  std::transform(values.begin(), values.end(), out.begin(), safe_log);
  return out;
}

void require_frames(std::size_t frames, std::size_t minimum) {
  if (frames < minimum)
    throw DataError(fmt::format("sequence has {} frames, at least {} required", frames, minimum));
}

EmissionTable emissions_for(std::span<const GaussianMixture> states, const FeatureSequence& obs) {
  return compute_emissions(EmissionModel(states), obs, false, Exec::kSerial);
}

}  // namespace

LogParams2::LogParams2(const Hmm2Model& model)
    : states(model.num_states()),
      initial(log_of(model.initial)),
      first_step(log_of(model.first_step)),
      transitions(log_of(model.transitions)) {}

LogParams1::LogParams1(const Hmm1Model& model)
    : states(model.num_states()), initial(log_of(model.initial)), transitions(log_of(model.transitions)) {}

// ---------------------------------------------------------------------------
// Second order

Trellis2 forward2(const LogParams2& params, const EmissionTable& emissions) {
  const std::size_t n = params.states;
  const std::size_t frames = emissions.frames;
  require_frames(frames, 2);

  Trellis2 alpha;
  alpha.frames = frames;
  alpha.states = n;
  alpha.values.assign(frames * n * n, kLogZero);

  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = 0; k < n; ++k)
      alpha.at(1, j, k) = params.initial[j] + emissions.b(0, j) + params.a2(j, k) + emissions.b(1, k);

  std::vector<double> terms(n);
  for (std::size_t t = 2; t < frames; ++t) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t i = 0; i < n; ++i) terms[i] = alpha.at(t - 1, i, j) + params.a3(i, j, k);
        alpha.at(t, j, k) = log_sum_exp(terms) + emissions.b(t, k);
      }
    }
  }
  alpha.log_likelihood = log_sum_exp({alpha.values.data() + (frames - 1) * n * n, n * n});
  return alpha;
}

Trellis2 forward2(const Hmm2Model& model, const FeatureSequence& obs) {
  require_frames(obs.frames(), 2);
  return forward2(LogParams2(model), emissions_for(model.states, obs));
}

Trellis2 backward2(const LogParams2& params, const EmissionTable& emissions) {
  const std::size_t n = params.states;
  const std::size_t frames = emissions.frames;
  require_frames(frames, 2);

  Trellis2 beta;
  beta.frames = frames;
  beta.states = n;
  beta.values.assign(frames * n * n, kLogZero);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) beta.at(frames - 1, i, j) = 0.0;

  std::vector<double> terms(n);
  for (std::size_t t = frames - 1; t-- > 1;) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k = 0; k < n; ++k)
          terms[k] = params.a3(i, j, k) + emissions.b(t + 1, k) + beta.at(t + 1, j, k);
        beta.at(t, i, j) = log_sum_exp(terms);
      }
    }
  }

  // P(O) from the t = 1 boundary, so callers get the likelihood from
  // either pass.
  std::vector<double> start(n * n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = 0; k < n; ++k)
      start[j * n + k] =
          params.initial[j] + emissions.b(0, j) + params.a2(j, k) + emissions.b(1, k) + beta.at(1, j, k);
  beta.log_likelihood = log_sum_exp(start);
  return beta;
}

Trellis2 backward2(const Hmm2Model& model, const FeatureSequence& obs) {
  require_frames(obs.frames(), 2);
  return backward2(LogParams2(model), emissions_for(model.states, obs));
}

ViterbiPath viterbi2(const LogParams2& params, const EmissionTable& emissions) {
  const std::size_t n = params.states;
  const std::size_t frames = emissions.frames;
  require_frames(frames, 2);

  Trellis2 delta;
  delta.frames = frames;
  delta.states = n;
  delta.values.assign(frames * n * n, kLogZero);
  delta.backpointers.assign(frames * n * n, -1);

  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = 0; k < n; ++k)
      delta.at(1, j, k) = params.initial[j] + emissions.b(0, j) + params.a2(j, k) + emissions.b(1, k);

  for (std::size_t t = 2; t < frames; ++t) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < n; ++k) {
        double best = kLogZero;
        int arg = -1;
        for (std::size_t i = 0; i < n; ++i) {
          const double v = delta.at(t - 1, i, j) + params.a3(i, j, k);
          if (arg < 0 || v > best) {
            best = v;
            arg = static_cast<int>(i);
          }
        }
        delta.at(t, j, k) = best + emissions.b(t, k);
        delta.backpointers[(t * n + j) * n + k] = arg;
      }
    }
  }

  double best = kLogZero;
  std::size_t best_j = 0;
  std::size_t best_k = 0;
  bool found = false;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < n; ++k) {
      const double v = delta.at(frames - 1, j, k);
      if (!found || v > best) {
        best = v;
        best_j = j;
        best_k = k;
        found = true;
      }
    }
  }
  if (is_log_zero(best)) throw NumericError("no state path has non-zero probability");

  ViterbiPath path;
  path.log_score = best;
  path.states.assign(frames, 0);
  path.states[frames - 1] = static_cast<int>(best_k);
  path.states[frames - 2] = static_cast<int>(best_j);
  for (std::size_t t = frames - 1; t >= 2; --t) {
    const auto j = static_cast<std::size_t>(path.states[t - 1]);
    const auto k = static_cast<std::size_t>(path.states[t]);
    path.states[t - 2] = delta.backpointers[(t * n + j) * n + k];
  }
  return path;
}

ViterbiPath viterbi2(const Hmm2Model& model, const FeatureSequence& obs) {
  require_frames(obs.frames(), 2);
  return viterbi2(LogParams2(model), emissions_for(model.states, obs));
}

namespace {

void check_path(std::span<const int> states, std::size_t n, std::size_t minimum) {
  require_frames(states.size(), minimum);
  for (int q : states) {
    if (q < 0 || static_cast<std::size_t>(q) >= n) throw DataError(fmt::format("state index {} out of range", q));
  }
}

double state_only2(const Hmm2Model& model, std::span<const int> q) {
  auto u = [&](std::size_t t) { return static_cast<std::size_t>(q[t]); };
  double acc = safe_log(model.initial[u(0)]) + safe_log(model.a2(u(0), u(1)));
  for (std::size_t t = 2; t < q.size(); ++t) acc += safe_log(model.a3(u(t - 2), u(t - 1), u(t)));
  return acc;
}

}  // namespace

double path_log_prob2(const Hmm2Model& model, std::span<const int> states) {
  check_path(states, model.num_states(), 2);
  return state_only2(model, states);
}

double path_log_prob2(const Hmm2Model& model, std::span<const int> states, const FeatureSequence& obs) {
  check_path(states, model.num_states(), 2);
  if (states.size() != obs.frames())
    throw DataError(fmt::format("path has {} states but sequence has {} frames", states.size(), obs.frames()));
  double acc = state_only2(model, states);
  for (std::size_t t = 0; t < states.size(); ++t)
    acc += gmm_log_density(model.states[static_cast<std::size_t>(states[t])], obs.row(t));
  return acc;
}

// ---------------------------------------------------------------------------
// First order

Trellis1 forward1(const LogParams1& params, const EmissionTable& emissions) {
  const std::size_t n = params.states;
  const std::size_t frames = emissions.frames;
  require_frames(frames, 1);

  Trellis1 alpha;
  alpha.frames = frames;
  alpha.states = n;
  alpha.values.assign(frames * n, kLogZero);
  for (std::size_t j = 0; j < n; ++j) alpha.at(0, j) = params.initial[j] + emissions.b(0, j);

  std::vector<double> terms(n);
  for (std::size_t t = 1; t < frames; ++t) {
    for (std::size_t k = 0; k < n; ++k) {
      for (std::size_t j = 0; j < n; ++j) terms[j] = alpha.at(t - 1, j) + params.a(j, k);
      alpha.at(t, k) = log_sum_exp(terms) + emissions.b(t, k);
    }
  }
  alpha.log_likelihood = log_sum_exp({alpha.values.data() + (frames - 1) * n, n});
  return alpha;
}

Trellis1 forward1(const Hmm1Model& model, const FeatureSequence& obs) {
  require_frames(obs.frames(), 1);
  return forward1(LogParams1(model), emissions_for(model.states, obs));
}

Trellis1 backward1(const LogParams1& params, const EmissionTable& emissions) {
  const std::size_t n = params.states;
  const std::size_t frames = emissions.frames;
  require_frames(frames, 1);

  Trellis1 beta;
  beta.frames = frames;
  beta.states = n;
  beta.values.assign(frames * n, kLogZero);
  for (std::size_t j = 0; j < n; ++j) beta.at(frames - 1, j) = 0.0;

  std::vector<double> terms(n);
  for (std::size_t t = frames - 1; t-- > 0;) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < n; ++k) terms[k] = params.a(j, k) + emissions.b(t + 1, k) + beta.at(t + 1, k);
      beta.at(t, j) = log_sum_exp(terms);
    }
  }
  for (std::size_t j = 0; j < n; ++j) terms[j] = params.initial[j] + emissions.b(0, j) + beta.at(0, j);
  beta.log_likelihood = log_sum_exp(terms);
  return beta;
}

Trellis1 backward1(const Hmm1Model& model, const FeatureSequence& obs) {
  require_frames(obs.frames(), 1);
  return backward1(LogParams1(model), emissions_for(model.states, obs));
}

ViterbiPath viterbi1(const LogParams1& params, const EmissionTable& emissions) {
  const std::size_t n = params.states;
  const std::size_t frames = emissions.frames;
  require_frames(frames, 1);

  std::vector<double> delta(frames * n, kLogZero);
  std::vector<int> back(frames * n, -1);
  for (std::size_t j = 0; j < n; ++j) delta[j] = params.initial[j] + emissions.b(0, j);

  for (std::size_t t = 1; t < frames; ++t) {
    for (std::size_t k = 0; k < n; ++k) {
      double best = kLogZero;
      int arg = -1;
      for (std::size_t j = 0; j < n; ++j) {
        const double v = delta[(t - 1) * n + j] + params.a(j, k);
        if (arg < 0 || v > best) {
          best = v;
          arg = static_cast<int>(j);
        }
      }
      delta[t * n + k] = best + emissions.b(t, k);
      back[t * n + k] = arg;
    }
  }

  std::size_t best_k = 0;
  for (std::size_t k = 1; k < n; ++k)
    if (delta[(frames - 1) * n + k] > delta[(frames - 1) * n + best_k]) best_k = k;
  const double best = delta[(frames - 1) * n + best_k];
  if (is_log_zero(best)) throw NumericError("no state path has non-zero probability");

  ViterbiPath path;
  path.log_score = best;
  path.states.assign(frames, 0);
  path.states[frames - 1] = static_cast<int>(best_k);
  for (std::size_t t = frames - 1; t >= 1; --t)
    path.states[t - 1] = back[t * n + static_cast<std::size_t>(path.states[t])];
  return path;
}

ViterbiPath viterbi1(const Hmm1Model& model, const FeatureSequence& obs) {
  require_frames(obs.frames(), 1);
  return viterbi1(LogParams1(model), emissions_for(model.states, obs));
}

namespace {

double state_only1(const Hmm1Model& model, std::span<const int> q) {
  auto u = [&](std::size_t t) { return static_cast<std::size_t>(q[t]); };
  double acc = safe_log(model.initial[u(0)]);
  for (std::size_t t = 1; t < q.size(); ++t) acc += safe_log(model.a(u(t - 1), u(t)));
  return acc;
}

}  // namespace

double path_log_prob1(const Hmm1Model& model, std::span<const int> states) {
  check_path(states, model.num_states(), 1);
  return state_only1(model, states);
}

double path_log_prob1(const Hmm1Model& model, std::span<const int> states, const FeatureSequence& obs) {
  check_path(states, model.num_states(), 1);
  if (states.size() != obs.frames())
    throw DataError(fmt::format("path has {} states but sequence has {} frames", states.size(), obs.frames()));
  double acc = state_only1(model, states);
  for (std::size_t t = 0; t < states.size(); ++t)
    acc += gmm_log_density(model.states[static_cast<std::size_t>(states[t])], obs.row(t));
  return acc;
}

}  // namespace hmm2
