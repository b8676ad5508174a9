#include <algorithm>
#include <limits>

#include <fmt/format.h>

#include "hmm2/error.hpp"
#include "hmm2/random.hpp"
#include "hmm2/training.hpp"

namespace hmm2 {

namespace {

double squared_distance(std::span<const double> a, const double* b) {
  double acc = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    const double diff = a[d] - b[d];
    acc += diff * diff;
  }
  return acc;
}

std::size_t nearest(std::span<const double> p, const std::vector<double>& centers, std::size_t k) {
  const std::size_t dim = p.size();
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < k; ++c) {
    const double d = squared_distance(p, centers.data() + c * dim);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

// Per-dimension mean and (population) variance of a point set.
void moments(std::span<const std::span<const double>> points, std::size_t dim, std::vector<double>& mean,
             std::vector<double>& var) {
  mean.assign(dim, 0.0);
  var.assign(dim, 0.0);
  if (points.empty()) return;
  for (const auto& p : points)
    for (std::size_t d = 0; d < dim; ++d) mean[d] += p[d];
  for (auto& m : mean) m /= static_cast<double>(points.size());
  for (const auto& p : points) {
    for (std::size_t d = 0; d < dim; ++d) {
      const double diff = p[d] - mean[d];
      var[d] += diff * diff;
    }
  }
  for (auto& v : var) v /= static_cast<double>(points.size());
}

GaussianMixture init_mixture(std::span<const std::span<const double>> frames, std::size_t dim,
                             std::size_t mixtures, std::uint64_t seed, std::span<const double> var_floor,
                             double weight_floor) {
  GaussianMixture gmm(mixtures, dim);
  std::vector<double> state_mean;
  std::vector<double> state_var;
  moments(frames, dim, state_mean, state_var);
  for (std::size_t d = 0; d < dim; ++d) state_var[d] = std::max(state_var[d], var_floor[d]);

  const KMeansResult km = kmeans(frames, dim, mixtures, seed, 10);
  std::vector<std::vector<std::span<const double>>> members(mixtures);
  for (std::size_t i = 0; i < frames.size(); ++i) members[km.assignment[i]].push_back(frames[i]);

  std::vector<double> sizes(mixtures);
  std::vector<double> mean;
  std::vector<double> var;
  for (std::size_t m = 0; m < mixtures; ++m) {
    sizes[m] = static_cast<double>(members[m].size());
    std::copy_n(km.centers.begin() + static_cast<std::ptrdiff_t>(m * dim), dim, gmm.mean(m).begin());
    auto v = gmm.variance(m);
    if (members[m].size() >= 2) {
      moments(members[m], dim, mean, var);
      for (std::size_t d = 0; d < dim; ++d) v[d] = std::max(var[d], var_floor[d]);
    } else {
      // A singleton cluster has no scatter; fall back to the state's spread.
      std::copy(state_var.begin(), state_var.end(), v.begin());
    }
  }
  const std::vector<std::uint8_t> allowed(mixtures, 1);
  if (!floored_normalize(sizes, allowed, weight_floor, gmm.weights))
    std::fill(gmm.weights.begin(), gmm.weights.end(), 1.0 / static_cast<double>(mixtures));
  return gmm;
}

struct StateInit {
  std::vector<GaussianMixture> states;
  std::vector<double> initial;
};

StateInit init_states(std::span<const FeatureSequence> corpus, std::size_t n, std::size_t mixtures,
                      Topology topology, std::uint64_t seed, const TrainConfig& cfg) {
  cfg.validate();
  if (corpus.empty()) throw DataError("cannot initialize from an empty corpus");
  if (n < 1 || mixtures < 1) throw DataError("state and mixture counts must be at least 1");
  const std::size_t dim = corpus.front().dim();
  std::size_t total = 0;
  for (const auto& seq : corpus) {
    if (seq.dim() != dim) throw DataError("corpus sequences have different dimensions");
    total += seq.frames();
  }
  if (total < n * mixtures)
    throw DataError(fmt::format("corpus has {} frames, initialization needs at least N*M = {}", total, n * mixtures));

  const auto var_floor = variance_floor(corpus, cfg);

  std::vector<std::span<const double>> pooled;
  pooled.reserve(total);
  for (const auto& seq : corpus)
    for (std::size_t t = 0; t < seq.frames(); ++t) pooled.push_back(seq.row(t));

  std::vector<std::vector<std::span<const double>>> per_state(n);
  if (topology == Topology::kLeftRight) {
    for (const auto& seq : corpus) {
      const std::size_t frames = seq.frames();
      for (std::size_t t = 0; t < frames; ++t) per_state[t * n / frames].push_back(seq.row(t));
    }
  } else {
    // States carry most of the model's structure, so take the best of several
    // seedings rather than whatever the first one converges to.
    KMeansResult km;
    for (std::size_t r = 0; r < cfg.init_restarts; ++r) {
      KMeansResult candidate = kmeans(pooled, dim, n, derive_seed(seed, 1000 + r), 20);
      if (r == 0 || candidate.inertia < km.inertia) km = std::move(candidate);
    }
    for (std::size_t i = 0; i < pooled.size(); ++i) per_state[km.assignment[i]].push_back(pooled[i]);
  }

  StateInit out;
  for (std::size_t k = 0; k < n; ++k) {
    std::span<const std::span<const double>> frames = per_state[k];
    // Too few frames of its own: initialize from the whole corpus.
    if (frames.size() < mixtures) frames = pooled;
    out.states.push_back(init_mixture(frames, dim, mixtures, derive_seed(seed, k + 1), var_floor, cfg.weight_floor));
  }

  out.initial.assign(n, 0.0);
  if (topology == Topology::kLeftRight)
    out.initial[0] = 1.0;
  else
    std::fill(out.initial.begin(), out.initial.end(), 1.0 / static_cast<double>(n));
  return out;
}

std::vector<double> uniform_rows(std::size_t rows, std::size_t n, Topology topology) {
  std::vector<double> out(rows * n, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t from = r % n;
    std::size_t allowed = 0;
    for (std::size_t k = 0; k < n; ++k) allowed += transition_allowed(topology, from, k) ? 1 : 0;
    for (std::size_t k = 0; k < n; ++k)
      if (transition_allowed(topology, from, k)) out[r * n + k] = 1.0 / static_cast<double>(allowed);
  }
  return out;
}

}  // namespace

KMeansResult kmeans(std::span<const std::span<const double>> points, std::size_t dim, std::size_t k,
                    std::uint64_t seed, std::size_t iterations) {
  if (points.empty() || k == 0) throw DataError("k-means needs points and k >= 1");
  const std::size_t count = points.size();
  KMeansResult out;
  out.centers.assign(k * dim, 0.0);
  out.assignment.assign(count, 0);

  auto set_center = [&](std::size_t c, std::span<const double> p) {
    std::copy(p.begin(), p.end(), out.centers.begin() + static_cast<std::ptrdiff_t>(c * dim));
  };

  if (count <= k) {
    for (std::size_t c = 0; c < k; ++c) set_center(c, points[c % count]);
    for (std::size_t i = 0; i < count; ++i) out.assignment[i] = i;
    return out;
  }

  // k-means++ seeding.
  Rng rng(seed);
  set_center(0, points[rng.index(count)]);
  std::vector<double> dist(count, std::numeric_limits<double>::infinity());
  for (std::size_t c = 1; c < k; ++c) {
    for (std::size_t i = 0; i < count; ++i)
      dist[i] = std::min(dist[i], squared_distance(points[i], out.centers.data() + (c - 1) * dim));
    set_center(c, points[rng.categorical(dist)]);
  }

  std::vector<double> sums(k * dim);
  std::vector<std::size_t> sizes(k);
  for (std::size_t iter = 0; iter < iterations; ++iter) {
    for (std::size_t i = 0; i < count; ++i) out.assignment[i] = nearest(points[i], out.centers, k);
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(sizes.begin(), sizes.end(), 0);
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t c = out.assignment[i];
      ++sizes[c];
      for (std::size_t d = 0; d < dim; ++d) sums[c * dim + d] += points[i][d];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] == 0) continue;
      for (std::size_t d = 0; d < dim; ++d)
        out.centers[c * dim + d] = sums[c * dim + d] / static_cast<double>(sizes[c]);
    }
  }
  out.inertia = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    out.assignment[i] = nearest(points[i], out.centers, k);
    out.inertia += squared_distance(points[i], out.centers.data() + out.assignment[i] * dim);
  }
  return out;
}

Hmm2Model init_model2(std::span<const FeatureSequence> corpus, std::size_t states, std::size_t mixtures,
                      Topology topology, std::uint64_t seed, const TrainConfig& cfg) {
  StateInit init = init_states(corpus, states, mixtures, topology, seed, cfg);
  Hmm2Model model;
  model.topology = topology;
  model.initial = std::move(init.initial);
  model.first_step = uniform_rows(states, states, topology);
  model.transitions = uniform_rows(states * states, states, topology);
  model.states = std::move(init.states);
  return model;
}

Hmm1Model init_model1(std::span<const FeatureSequence> corpus, std::size_t states, std::size_t mixtures,
                      Topology topology, std::uint64_t seed, const TrainConfig& cfg) {
  StateInit init = init_states(corpus, states, mixtures, topology, seed, cfg);
  Hmm1Model model;
  model.topology = topology;
  model.initial = std::move(init.initial);
  model.transitions = uniform_rows(states, states, topology);
  model.states = std::move(init.states);
  return model;
}

}  // namespace hmm2
