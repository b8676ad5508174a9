#include "hmm2/training.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include <fmt/format.h>

#include "hmm2/error.hpp"
#include "hmm2/logmath.hpp"
#include "hmm2/trellis.hpp"

namespace hmm2 {

namespace {

// Components with less posterior mass than this keep their parameters.
constexpr double kMinOccupancy = 1e-10;

void add_into(std::vector<double>& into, const std::vector<double>& from) {
  for (std::size_t i = 0; i < into.size(); ++i) into[i] += from[i];
}

// Adds one frame's state occupancy, split over components by their
// posterior responsibilities.
void accumulate_frame(MixtureStats& stats, const EmissionTable& em, std::size_t t, std::size_t k, double occ,
                      std::span<const double> o) {
  if (occ <= 0.0) return;
  const std::size_t mixtures = stats.mixtures;
  const std::size_t dim = stats.dim;
  const double log_b = em.b(t, k);
  const auto comps = em.components(t, k);
  for (std::size_t m = 0; m < mixtures; ++m) {
    const double r = occ * std::exp(comps[m] - log_b);
    if (r <= 0.0) continue;
    const std::size_t cm = k * mixtures + m;
    stats.occupancy[cm] += r;
    const double* shift = stats.shift.data() + cm * dim;
    double* first = stats.first.data() + cm * dim;
    double* second = stats.second.data() + cm * dim;
    for (std::size_t d = 0; d < dim; ++d) {
      const double x = o[d] - shift[d];
      first[d] += r * x;
      second[d] += r * x * x;
    }
  }
}

void check_corpus(std::span<const FeatureSequence> corpus, std::size_t dim, std::size_t min_frames) {
  if (corpus.empty()) throw DataError("training corpus is empty");
  for (const auto& seq : corpus) {
    if (seq.dim() != dim)
      throw DataError(fmt::format("sequence has dimension {}, model expects {}", seq.dim(), dim));
    if (seq.frames() < min_frames)
      throw DataError(fmt::format("sequence has {} frames, training needs at least {}", seq.frames(), min_frames));
  }
}

void accumulate_sequence2(const Hmm2Model& model, const LogParams2& lp, const EmissionModel& em_model,
                          const FeatureSequence& obs, Stats2& stats) {
  const std::size_t n = model.num_states();
  const EmissionTable em = compute_emissions(em_model, obs, true, Exec::kSerial);
  const Trellis2 alpha = forward2(lp, em);
  const Trellis2 beta = backward2(lp, em);
  const double log_p = alpha.log_likelihood;
  if (!std::isfinite(log_p)) throw NumericError("training sequence has zero probability under the model");
  stats.log_likelihood += log_p;

  const std::size_t frames = obs.frames();
  std::vector<double> occ(n);

  // Pair posteriors at t = 1 give the initial and first-step counts, and
  // the occupancy of frame 0.
  std::fill(occ.begin(), occ.end(), 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < n; ++k) {
      const double g = std::exp(alpha.at(1, j, k) + beta.at(1, j, k) - log_p);
      stats.initial[j] += g;
      stats.first_step[j * n + k] += g;
      occ[j] += g;
    }
  }
  for (std::size_t j = 0; j < n; ++j) accumulate_frame(stats.mixtures, em, 0, j, occ[j], obs.row(0));

  for (std::size_t t = 1; t < frames; ++t) {
    std::fill(occ.begin(), occ.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k) occ[k] += std::exp(alpha.at(t, j, k) + beta.at(t, j, k) - log_p);
    for (std::size_t k = 0; k < n; ++k) accumulate_frame(stats.mixtures, em, t, k, occ[k], obs.row(t));

    if (t + 1 < frames) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          const double a = alpha.at(t, i, j);
          if (is_log_zero(a)) continue;
          double* row = stats.transitions.data() + (i * n + j) * n;
          for (std::size_t k = 0; k < n; ++k)
            row[k] += std::exp(a + lp.a3(i, j, k) + em.b(t + 1, k) + beta.at(t + 1, j, k) - log_p);
        }
      }
    }
  }
}

void accumulate_sequence1(const Hmm1Model& model, const LogParams1& lp, const EmissionModel& em_model,
                          const FeatureSequence& obs, Stats1& stats) {
  const std::size_t n = model.num_states();
  const EmissionTable em = compute_emissions(em_model, obs, true, Exec::kSerial);
  const Trellis1 alpha = forward1(lp, em);
  const Trellis1 beta = backward1(lp, em);
  const double log_p = alpha.log_likelihood;
  if (!std::isfinite(log_p)) throw NumericError("training sequence has zero probability under the model");
  stats.log_likelihood += log_p;

  const std::size_t frames = obs.frames();
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t j = 0; j < n; ++j) {
      const double g = std::exp(alpha.at(t, j) + beta.at(t, j) - log_p);
      if (t == 0) stats.initial[j] += g;
      accumulate_frame(stats.mixtures, em, t, j, g, obs.row(t));
    }
    if (t + 1 < frames) {
      for (std::size_t j = 0; j < n; ++j) {
        const double a = alpha.at(t, j);
        if (is_log_zero(a)) continue;
        for (std::size_t k = 0; k < n; ++k)
          stats.transitions[j * n + k] +=
              std::exp(a + lp.a(j, k) + em.b(t + 1, k) + beta.at(t + 1, k) - log_p);
      }
    }
  }
}

// Runs accumulate(seq, stats) for each sequence into its own statistics,
// optionally in parallel, then sums them in corpus order.
template <class Stats, class Model, class Accumulate>
Stats expectation(const Model& model, std::span<const FeatureSequence> corpus, Exec exec, Accumulate accumulate) {
  const auto count = static_cast<std::ptrdiff_t>(corpus.size());
  std::vector<std::unique_ptr<Stats>> partial(corpus.size());
  std::vector<std::exception_ptr> errors(corpus.size());
#pragma omp parallel for schedule(dynamic) if (exec == Exec::kParallel)
  for (std::ptrdiff_t s = 0; s < count; ++s) {
    const auto us = static_cast<std::size_t>(s);
    try {
      partial[us] = std::make_unique<Stats>(model);
      accumulate(corpus[us], *partial[us]);
    } catch (...) {
      errors[us] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  Stats total(model);
  for (const auto& p : partial) total.add(*p);
  return total;
}

// Re-estimates every mixture from its statistics.
void update_mixtures(std::vector<GaussianMixture>& states, const MixtureStats& stats,
                     std::span<const double> var_floor, double weight_floor, std::size_t iteration,
                     std::vector<ZeroOccupancy>& zero) {
  const std::size_t mixtures = stats.mixtures;
  const std::size_t dim = stats.dim;
  const std::vector<std::uint8_t> allowed(mixtures, 1);

  for (std::size_t k = 0; k < states.size(); ++k) {
    auto& gmm = states[k];
    const std::span<const double> occ(stats.occupancy.data() + k * mixtures, mixtures);
    if (!floored_normalize(occ, allowed, weight_floor, gmm.weights)) {
      zero.push_back({iteration, k, -1});
      continue;
    }
    for (std::size_t m = 0; m < mixtures; ++m) {
      const std::size_t cm = k * mixtures + m;
      const double n = occ[m];
      if (n < kMinOccupancy) {
        zero.push_back({iteration, k, static_cast<int>(m)});
        continue;
      }
      auto mean = gmm.mean(m);
      auto var = gmm.variance(m);
      for (std::size_t d = 0; d < dim; ++d) {
        const double offset = stats.first[cm * dim + d] / n;
        mean[d] = stats.shift[cm * dim + d] + offset;
        const double v = stats.second[cm * dim + d] / n - offset * offset;
        var[d] = std::max(v, var_floor[d]);
      }
    }
  }
}

// Row-wise re-estimation of a stochastic matrix whose rows have `width`
// entries; rows without counts keep their previous values.
void update_rows(std::span<double> probs, std::span<const double> counts, std::size_t width, Topology topology,
                 double floor) {
  std::vector<std::uint8_t> allowed(width);
  for (std::size_t r = 0; r * width < probs.size(); ++r) {
    const std::size_t from = r % width;
    for (std::size_t k = 0; k < width; ++k) allowed[k] = transition_allowed(topology, from, k);
    floored_normalize(counts.subspan(r * width, width), allowed, floor,
                      probs.subspan(r * width, width));
  }
}

void update_initial(std::span<double> probs, std::span<const double> counts, double floor) {
  const std::vector<std::uint8_t> allowed(probs.size(), 1);
  floored_normalize(counts, allowed, floor, probs);
}

template <class Model, class Stats, class EStep, class MStep>
TrainResult<Model> run_em(const Model& initial, const TrainConfig& cfg, EStep estep, MStep mstep,
                          const IterationObserver<Model>& observer) {
  TrainResult<Model> result;
  result.model = initial;
  double previous = 0.0;
  for (std::size_t iter = 0;; ++iter) {
    const Stats stats = estep(result.model);
    const double ll = stats.log_likelihood;
    result.trace.push_back(ll);
    if (iter > 0) {
      const double rel = (ll - previous) / std::abs(previous);
      if (rel < cfg.tolerance) {
        result.converged = true;
        break;
      }
    }
    if (iter == cfg.max_iterations) break;
    previous = ll;
    mstep(result.model, stats, iter, result.zero_occupancy);
    result.iterations = iter + 1;
    if (observer) observer(iter, result.model);
  }
  return result;
}

}  // namespace

void TrainConfig::validate() const {
  if (max_iterations < 1) throw DataError("max_iterations must be at least 1");
  if (init_restarts < 1) throw DataError("init_restarts must be at least 1");
  if (!(tolerance > 0.0)) throw DataError("convergence tolerance must be positive");
  if (!(variance_floor_factor > 0.0) || !(variance_floor_min > 0.0))
    throw DataError("variance floor settings must be positive");
  if (!(weight_floor > 0.0)) throw DataError("mixture weight floor must be positive");
  if (!(transition_floor >= 0.0)) throw DataError("transition floor must be non-negative");
}

MixtureStats::MixtureStats(std::span<const GaussianMixture> states)
    : states(states.size()),
      mixtures(states.empty() ? 0 : states.front().components()),
      dim(states.empty() ? 0 : states.front().dim),
      occupancy(this->states * mixtures, 0.0),
      first(this->states * mixtures * dim, 0.0),
      second(this->states * mixtures * dim, 0.0) {
  shift.reserve(first.size());
  for (const auto& s : states) shift.insert(shift.end(), s.means.begin(), s.means.end());
}

void MixtureStats::add(const MixtureStats& other) {
  add_into(occupancy, other.occupancy);
  add_into(first, other.first);
  add_into(second, other.second);
}

Stats2::Stats2(const Hmm2Model& model)
    : mixtures(model.states),
      initial(model.num_states(), 0.0),
      first_step(model.num_states() * model.num_states(), 0.0),
      transitions(model.num_states() * model.num_states() * model.num_states(), 0.0) {}

void Stats2::add(const Stats2& other) {
  mixtures.add(other.mixtures);
  add_into(initial, other.initial);
  add_into(first_step, other.first_step);
  add_into(transitions, other.transitions);
  log_likelihood += other.log_likelihood;
}

Stats1::Stats1(const Hmm1Model& model)
    : mixtures(model.states),
      initial(model.num_states(), 0.0),
      transitions(model.num_states() * model.num_states(), 0.0) {}

void Stats1::add(const Stats1& other) {
  mixtures.add(other.mixtures);
  add_into(initial, other.initial);
  add_into(transitions, other.transitions);
  log_likelihood += other.log_likelihood;
}

Stats2 expectation2(const Hmm2Model& model, std::span<const FeatureSequence> corpus, Exec exec) {
  const LogParams2 lp(model);
  const EmissionModel em(model.states);
  return expectation<Stats2>(model, corpus, exec, [&](const FeatureSequence& seq, Stats2& stats) {
    accumulate_sequence2(model, lp, em, seq, stats);
  });
}

Stats1 expectation1(const Hmm1Model& model, std::span<const FeatureSequence> corpus, Exec exec) {
  const LogParams1 lp(model);
  const EmissionModel em(model.states);
  return expectation<Stats1>(model, corpus, exec, [&](const FeatureSequence& seq, Stats1& stats) {
    accumulate_sequence1(model, lp, em, seq, stats);
  });
}

namespace reference {

Stats2 expectation2(const Hmm2Model& model, std::span<const FeatureSequence> corpus) {
  const LogParams2 lp(model);
  const EmissionModel em(model.states);
  Stats2 stats(model);
  for (const auto& seq : corpus) accumulate_sequence2(model, lp, em, seq, stats);
  return stats;
}

Stats1 expectation1(const Hmm1Model& model, std::span<const FeatureSequence> corpus) {
  const LogParams1 lp(model);
  const EmissionModel em(model.states);
  Stats1 stats(model);
  for (const auto& seq : corpus) accumulate_sequence1(model, lp, em, seq, stats);
  return stats;
}

}  // namespace reference

std::vector<double> variance_floor(std::span<const FeatureSequence> corpus, const TrainConfig& cfg) {
  if (corpus.empty()) throw DataError("training corpus is empty");
  const std::size_t dim = corpus.front().dim();
  std::vector<double> mean(dim, 0.0);
  std::vector<double> sq(dim, 0.0);
  double count = 0.0;
  for (const auto& seq : corpus) {
    for (std::size_t t = 0; t < seq.frames(); ++t) {
      for (std::size_t d = 0; d < dim; ++d) mean[d] += seq(t, d);
      count += 1.0;
    }
  }
  for (auto& m : mean) m /= count;
  for (const auto& seq : corpus) {
    for (std::size_t t = 0; t < seq.frames(); ++t) {
      for (std::size_t d = 0; d < dim; ++d) {
        const double diff = seq(t, d) - mean[d];
        sq[d] += diff * diff;
      }
    }
  }
  std::vector<double> floor(dim);
  for (std::size_t d = 0; d < dim; ++d)
    floor[d] = std::max(cfg.variance_floor_factor * sq[d] / count, cfg.variance_floor_min);
  return floor;
}

TrainResult<Hmm2Model> baum_welch2(const Hmm2Model& initial, std::span<const FeatureSequence> corpus,
                                   const TrainConfig& cfg, const IterationObserver<Hmm2Model>& observer) {
  cfg.validate();
  initial.validate();
  check_corpus(corpus, initial.dim(), 3);
  const auto var_floor = variance_floor(corpus, cfg);
  const std::size_t n = initial.num_states();

  auto estep = [&](const Hmm2Model& model) { return expectation2(model, corpus, cfg.exec); };
  auto mstep = [&](Hmm2Model& model, const Stats2& stats, std::size_t iter, std::vector<ZeroOccupancy>& zero) {
    if (!cfg.freeze_initials) {
      update_initial(model.initial, stats.initial, cfg.transition_floor);
      update_rows(model.first_step, stats.first_step, n, model.topology, cfg.transition_floor);
    }
    update_rows(model.transitions, stats.transitions, n, model.topology, cfg.transition_floor);
    update_mixtures(model.states, stats.mixtures, var_floor, cfg.weight_floor, iter, zero);
  };
  auto result = run_em<Hmm2Model, Stats2>(initial, cfg, estep, mstep, observer);
  if (cfg.freeze_initials) result.model.metadata["freeze_initials"] = "true";
  return result;
}

TrainResult<Hmm1Model> baum_welch1(const Hmm1Model& initial, std::span<const FeatureSequence> corpus,
                                   const TrainConfig& cfg, const IterationObserver<Hmm1Model>& observer) {
  cfg.validate();
  initial.validate();
  check_corpus(corpus, initial.dim(), 2);
  const auto var_floor = variance_floor(corpus, cfg);
  const std::size_t n = initial.num_states();

  auto estep = [&](const Hmm1Model& model) { return expectation1(model, corpus, cfg.exec); };
  auto mstep = [&](Hmm1Model& model, const Stats1& stats, std::size_t iter, std::vector<ZeroOccupancy>& zero) {
    if (!cfg.freeze_initials) update_initial(model.initial, stats.initial, cfg.transition_floor);
    update_rows(model.transitions, stats.transitions, n, model.topology, cfg.transition_floor);
    update_mixtures(model.states, stats.mixtures, var_floor, cfg.weight_floor, iter, zero);
  };
  auto result = run_em<Hmm1Model, Stats1>(initial, cfg, estep, mstep, observer);
  if (cfg.freeze_initials) result.model.metadata["freeze_initials"] = "true";
  return result;
}

}  // namespace hmm2
