#include "hmm2/model.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "hmm2/error.hpp"

namespace hmm2 {

std::string_view to_string(Topology topology) {
  return topology == Topology::kErgodic ? "ergodic" : "left-right";
}

Topology parse_topology(std::string_view text) {
  if (text == "ergodic") return Topology::kErgodic;
  if (text == "left-right") return Topology::kLeftRight;
  throw DataError(fmt::format("unknown topology '{}'", text));
}

namespace {

double row_error(std::span<const double> row) {
  double total = 0.0;
  for (double p : row) total += p;
  return std::abs(total - 1.0);
}

void check_probabilities(std::span<const double> values, std::string_view what) {
  for (double p : values) {
    if (!(p >= 0.0 && p <= 1.0 + 1e-12))
      throw DataError(fmt::format("{} contains a value outside [0, 1]", what));
  }
}

void check_states(const std::vector<GaussianMixture>& states, double tol) {
  if (states.empty()) throw DataError("model has no states");
  const std::size_t m = states.front().components();
  const std::size_t d = states.front().dim;
  for (const auto& s : states) {
    if (s.components() != m || s.dim != d)
      throw DataError("all states must share mixture count and dimension");
    s.validate(tol);
  }
}

void check_rows(std::span<const double> values, std::size_t width, double tol, std::string_view what) {
  check_probabilities(values, what);
  for (std::size_t r = 0; r * width < values.size(); ++r) {
    const double err = row_error(values.subspan(r * width, width));
    if (err > tol) throw DataError(fmt::format("{} row {} does not sum to 1 (error {})", what, r, err));
  }
}

}  // namespace

void Hmm1Model::validate(double tol) const {
  check_states(states, tol);
  const std::size_t n = num_states();
  if (initial.size() != n || transitions.size() != n * n) throw DataError("HMM1 parameter shapes disagree");
  check_rows(initial, n, tol, "initial vector");
  check_rows(transitions, n, tol, "transition matrix");
  if (topology == Topology::kLeftRight) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < i; ++j)
        if (a(i, j) != 0.0) throw DataError("left-right model has a backward transition");
  }
}

void Hmm2Model::validate(double tol) const {
  check_states(states, tol);
  const std::size_t n = num_states();
  if (initial.size() != n || first_step.size() != n * n || transitions.size() != n * n * n)
    throw DataError("HMM2 parameter shapes disagree");
  check_rows(initial, n, tol, "initial vector");
  check_rows(first_step, n, tol, "first-step matrix");
  check_rows(transitions, n, tol, "transition tensor");
  if (topology == Topology::kLeftRight) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < j; ++k) {
        if (a2(j, k) != 0.0) throw DataError("left-right model has a backward first-step transition");
        for (std::size_t i = 0; i < n; ++i)
          if (a3(i, j, k) != 0.0) throw DataError("left-right model has a backward transition");
      }
    }
  }
}

namespace {

double rows_error(std::span<const double> values, std::size_t width) {
  double worst = 0.0;
  for (std::size_t r = 0; r * width < values.size(); ++r)
    worst = std::max(worst, row_error(values.subspan(r * width, width)));
  return worst;
}

double mixtures_error(const std::vector<GaussianMixture>& states) {
  double worst = 0.0;
  for (const auto& s : states) worst = std::max(worst, row_error(s.weights));
  return worst;
}

}  // namespace

double max_stochastic_error(const Hmm1Model& model) {
  const std::size_t n = model.num_states();
  return std::max({row_error(model.initial), rows_error(model.transitions, n), mixtures_error(model.states)});
}

double max_stochastic_error(const Hmm2Model& model) {
  const std::size_t n = model.num_states();
  return std::max({row_error(model.initial), rows_error(model.first_step, n),
                   rows_error(model.transitions, n), mixtures_error(model.states)});
}

Hmm2Model lift_to_second_order(const Hmm1Model& model) {
  const std::size_t n = model.num_states();
  Hmm2Model out;
  out.topology = model.topology;
  out.initial = model.initial;
  out.first_step = model.transitions;
  out.states = model.states;
  out.transitions.resize(n * n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k) out.a3(i, j, k) = model.a(j, k);
  out.metadata = model.metadata;
  return out;
}

}  // namespace hmm2
