#include <doctest.h>

#include <cmath>
#include <vector>

#include "hmm2/error.hpp"
#include "hmm2/logmath.hpp"
#include "hmm2/sampling.hpp"
#include "hmm2/trellis.hpp"
#include "oracles.hpp"

using namespace hmm2;

TEST_CASE("forward2 and viterbi2 agree with path enumeration") {
  Rng rng(101);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t n = 1 + rng.index(3);
    const std::size_t frames = 2 + rng.index(4);
    const auto model = oracle::random_hmm2(rng, n, 2, 2);
    const auto obs = oracle::random_sequence(rng, frames, 2);
    const auto ref = oracle::enumerate2(model, obs);

    const auto alpha = forward2(model, obs);
    CHECK(oracle::relative_error(alpha.log_likelihood, std::log(ref.total)) < 1e-10);
    const auto beta = backward2(model, obs);
    CHECK(oracle::relative_error(beta.log_likelihood, std::log(ref.total)) < 1e-10);

    const auto path = viterbi2(model, obs);
    CHECK(path.states == ref.argmax);
    CHECK(oracle::relative_error(path.log_score, std::log(ref.best)) < 1e-10);
    CHECK(path_log_prob2(model, path.states, obs) == doctest::Approx(path.log_score).epsilon(1e-12));
  }
}

TEST_CASE("forward1 and viterbi1 agree with path enumeration") {
  Rng rng(102);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t n = 1 + rng.index(3);
    const std::size_t frames = 1 + rng.index(5);
    const auto model = oracle::random_hmm1(rng, n, 2, 2);
    const auto obs = oracle::random_sequence(rng, frames, 2);
    const auto ref = oracle::enumerate1(model, obs);
    CHECK(oracle::relative_error(forward1(model, obs).log_likelihood, std::log(ref.total)) < 1e-10);
    CHECK(oracle::relative_error(backward1(model, obs).log_likelihood, std::log(ref.total)) < 1e-10);
    const auto path = viterbi1(model, obs);
    CHECK(path.states == ref.argmax);
    CHECK(oracle::relative_error(path.log_score, std::log(ref.best)) < 1e-10);
  }
}

TEST_CASE("alpha times beta sums to the likelihood at every frame") {
  Rng rng(103);
  for (int trial = 0; trial < 10; ++trial) {
    const auto model = oracle::random_hmm2(rng, 4, 3, 3);
    const auto obs = sample_hmm2(model, 60, rng.next_u64()).observations;
    const auto alpha = forward2(model, obs);
    const auto beta = backward2(model, obs);
    for (std::size_t t = 1; t < obs.frames(); ++t) {
      std::vector<double> terms;
      for (std::size_t j = 0; j < 4; ++j)
        for (std::size_t k = 0; k < 4; ++k) terms.push_back(alpha.at(t, j, k) + beta.at(t, j, k));
      CHECK(std::abs(log_sum_exp(terms) - alpha.log_likelihood) < 1e-8);
    }
  }
}

TEST_CASE("a lifted first-order model scores and decodes like the original") {
  Rng rng(104);
  for (int trial = 0; trial < 10; ++trial) {
    const auto hmm1 = oracle::random_hmm1(rng, 3, 2, 2);
    const auto hmm2 = lift_to_second_order(hmm1);
    CHECK_NOTHROW(hmm2.validate());
    const auto obs = oracle::random_sequence(rng, 30, 2);
    CHECK(forward2(hmm2, obs).log_likelihood == doctest::Approx(forward1(hmm1, obs).log_likelihood).epsilon(1e-12));
    CHECK(viterbi2(hmm2, obs).states == viterbi1(hmm1, obs).states);
  }
}

TEST_CASE("path probabilities of a deterministic chain") {
  Hmm2Model m;
  m.topology = Topology::kErgodic;
  m.initial = {1.0, 0.0};
  m.first_step = {0.0, 1.0, 1.0, 0.0};
  // From (i, j) always move to i: the chain alternates 0, 1, 0, 1, ...
  m.transitions = {1, 0, 1, 0, 0, 1, 0, 1};
  GaussianMixture g(1, 1);
  g.weights = {1.0};
  g.means = {0.0};
  g.variances = {1.0};
  m.states = {g, g};
  CHECK(path_log_prob2(m, std::vector<int>{0, 1, 0, 1}) == 0.0);
  CHECK(is_log_zero(path_log_prob2(m, std::vector<int>{0, 1, 1})));
  CHECK(is_log_zero(path_log_prob2(m, std::vector<int>{1, 0})));
}

TEST_CASE("viterbi2 breaks ties toward the lowest state index") {
  // Identical states and uniform transitions: every path scores the same.
  Hmm2Model m;
  m.initial = {0.5, 0.5};
  m.first_step = {0.5, 0.5, 0.5, 0.5};
  m.transitions.assign(8, 0.5);
  GaussianMixture g(1, 1);
  g.weights = {1.0};
  g.means = {0.0};
  g.variances = {1.0};
  m.states = {g, g};
  FeatureSequence obs(4, 1);
  CHECK(viterbi2(m, obs).states == std::vector<int>{0, 0, 0, 0});
}

TEST_CASE("left-right models give zero probability to backward paths") {
  Hmm2Model m;
  m.topology = Topology::kLeftRight;
  m.initial = {1.0, 0.0};
  m.first_step = {0.5, 0.5, 0.0, 1.0};
  m.transitions = {0.5, 0.5, 0.0, 1.0, 0.5, 0.5, 0.0, 1.0};
  GaussianMixture a(1, 1);
  a.weights = {1.0};
  a.means = {-3.0};
  a.variances = {1.0};
  GaussianMixture b = a;
  b.means = {3.0};
  m.states = {a, b};
  CHECK_NOTHROW(m.validate());
  FeatureSequence obs(5, 1);
  const double xs[] = {-3, 3, -3, 3, 3};
  for (std::size_t t = 0; t < 5; ++t) obs(t, 0) = xs[t];
  const auto path = viterbi2(m, obs);
  CHECK(path.states == std::vector<int>{0, 1, 1, 1, 1});
  CHECK(std::isfinite(forward2(m, obs).log_likelihood));
}

TEST_CASE("Hmm2Model validation catches left-right violations") {
  Hmm2Model m;
  m.topology = Topology::kLeftRight;
  m.initial = {1.0, 0.0};
  m.first_step = {0.5, 0.5, 0.5, 0.5};
  m.transitions.assign(8, 0.5);
  GaussianMixture g(1, 1);
  g.weights = {1.0};
  g.variances = {1.0};
  m.states = {g, g};
  CHECK_THROWS_AS(m.validate(), DataError);
  m.topology = Topology::kErgodic;
  CHECK_NOTHROW(m.validate());
  m.transitions[0] = 0.7;
  CHECK_THROWS_AS(m.validate(), DataError);
}

TEST_CASE("viterbi2 reports an impossible observation sequence") {
  Hmm2Model m;
  m.initial = {1.0, 0.0};
  m.first_step = {1.0, 0.0, 0.0, 1.0};
  m.transitions = {1, 0, 1, 0, 1, 0, 1, 0};
  GaussianMixture g(1, 1);
  g.weights = {1.0};
  g.variances = {1.0};
  m.states = {g, g};
  FeatureSequence obs(3, 1);
  // Huge distance underflows every emission to zero probability.
  for (std::size_t t = 0; t < 3; ++t) obs(t, 0) = 1e200;
  CHECK_THROWS_AS(viterbi2(m, obs), NumericError);
  CHECK(is_log_zero(forward2(m, obs).log_likelihood));
}

TEST_CASE("sequence length requirements") {
  Rng rng(9);
  const auto m2 = oracle::random_hmm2(rng, 2, 1, 1);
  const auto m1 = oracle::random_hmm1(rng, 2, 1, 1);
  FeatureSequence one(1, 1);
  CHECK_THROWS_AS(forward2(m2, one), DataError);
  CHECK_THROWS_AS(viterbi2(m2, one), DataError);
  CHECK_NOTHROW(forward1(m1, one));
  FeatureSequence wrong_dim(4, 2);
  CHECK_THROWS_AS(forward2(m2, wrong_dim), DataError);
}

TEST_CASE("sample_hmm2 is deterministic and follows the chain") {
  Rng rng(12);
  const auto m = oracle::random_hmm2(rng, 3, 2, 2);
  const auto a = sample_hmm2(m, 50, 77);
  const auto b = sample_hmm2(m, 50, 77);
  CHECK(a.states == b.states);
  CHECK(a.observations == b.observations);
  CHECK(std::isfinite(path_log_prob2(m, a.states)));
  CHECK(sample_hmm2(m, 50, 78).observations != a.observations);
}
