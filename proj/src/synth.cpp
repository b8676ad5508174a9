#include "hmm2/synth.hpp"

#include <cmath>
#include <numeric>
#include <set>

#include <json.hpp>

#include <fmt/format.h>

#include "hmm2/error.hpp"
#include "hmm2/feature_io.hpp"
#include "hmm2/model_io.hpp"
#include "hmm2/random.hpp"
#include "hmm2/sampling.hpp"

namespace hmm2 {

using nlohmann::json;

void SynthSpec::validate() const {
  if (conditions.empty()) throw DataError("synthetic spec has no conditions");
  std::set<std::string> labels;
  for (const auto& c : conditions) {
    if (c.label.empty()) throw DataError("synthetic condition label is empty");
    if (!labels.insert(c.label).second) throw DataError(fmt::format("duplicate synthetic condition '{}'", c.label));
    if (c.model) {
      c.model->validate();
      if (c.model->dim() != dim) throw DataError(fmt::format("model for '{}' has the wrong dimension", c.label));
    }
  }
  if (states < 1 || mixtures < 1 || dim < 1) throw DataError("synthetic N, M and D must be at least 1");
  if (tokens < 2) throw DataError("synthetic spec needs at least 2 tokens per condition");
  if (min_frames < 3 || max_frames < min_frames) throw DataError("synthetic frame range must satisfy 3 <= min <= max");
  if (!(separation >= 0.0) || !(state_spread >= 0.0) || !(component_spread >= 0.0))
    throw DataError("synthetic spreads must be non-negative");
  if (!(transition_strength >= 0.0 && transition_strength <= 1.0))
    throw DataError("transition strength must lie in [0, 1]");
  if (conditions.size() > 2 * dim) throw DataError("synthetic generator supports at most 2*D conditions");
}

SynthSpec make_synth_spec(const std::vector<std::string>& labels, std::uint64_t seed) {
  SynthSpec spec;
  spec.seed = seed;
  for (std::size_t c = 0; c < labels.size(); ++c) spec.conditions.push_back({labels[c], derive_seed(seed, 100 + c), {}});
  return spec;
}

namespace {

std::vector<std::size_t> permutation(std::size_t n, Rng& rng) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[rng.index(i)]);
  return p;
}

}  // namespace

Hmm2Model make_condition_model(const SynthSpec& spec, std::size_t index) {
  const SynthCondition& cond = spec.conditions.at(index);
  if (cond.model) return *cond.model;

  const std::size_t n = spec.states;
  const std::size_t m = spec.mixtures;
  const std::size_t d = spec.dim;

  // Shared layout: state centers and component jitter.
  Rng layout(spec.seed);
  std::vector<double> centers(n * d);
  for (auto& c : centers) c = spec.state_spread * layout.normal();
  std::vector<double> jitter(n * m * d);
  for (auto& j : jitter) j = spec.component_spread * layout.normal();

  // Condition offset: +-e_{c mod D} scaled so any two offsets are at least
  // `separation` apart.
  std::vector<double> offset(d, 0.0);
  const double magnitude = spec.separation / std::sqrt(2.0);
  offset[index % d] = index < d ? magnitude : -magnitude;

  Rng rng(cond.seed);
  Hmm2Model model;
  model.topology = Topology::kErgodic;
  model.states.assign(n, GaussianMixture(m, d));
  for (std::size_t k = 0; k < n; ++k) {
    auto& gmm = model.states[k];
    double total = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
      gmm.weights[c] = 0.5 + rng.uniform();
      total += gmm.weights[c];
      for (std::size_t x = 0; x < d; ++x) gmm.mean(c)[x] = centers[k * d + x] + jitter[(k * m + c) * d + x] + offset[x];
    }
    for (auto& w : gmm.weights) w /= total;
  }

  const double s = spec.transition_strength;
  const double base = (1.0 - s) / static_cast<double>(n);
  model.initial.assign(n, 1.0 / static_cast<double>(n));
  model.first_step.assign(n * n, 1.0 / static_cast<double>(n));
  model.transitions.assign(n * n * n, base);
  if (spec.transitions == TransitionKind::kSecondOrder) {
    for (std::size_t j = 0; j < n; ++j) {
      const auto perm = permutation(n, rng);
      for (std::size_t i = 0; i < n; ++i) model.a3(i, j, perm[i]) += s;
    }
  } else {
    const auto perm = permutation(n, rng);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) model.a3(i, j, perm[j]) += s;
  }
  return model;
}

SyntheticCorpus generate_synthetic_corpus(const SynthSpec& spec) {
  spec.validate();
  SyntheticCorpus corpus;
  for (std::size_t c = 0; c < spec.conditions.size(); ++c) {
    const auto& cond = spec.conditions[c];
    corpus.labels.push_back(cond.label);
    corpus.true_models.push_back(make_condition_model(spec, c));
    for (std::size_t token = 1; token <= spec.tokens; ++token) {
      Rng length_rng(derive_seed(cond.seed, 2 * token));
      const std::size_t frames = spec.min_frames + length_rng.index(spec.max_frames - spec.min_frames + 1);
      Sample sample = sample_hmm2(corpus.true_models.back(), frames, derive_seed(cond.seed, 2 * token + 1));
      sample.observations.provenance.source_id = fmt::format("synthetic:{}:{}", cond.label, token);

      ManifestEntry entry;
      entry.speaker = spec.speaker;
      entry.sentence = spec.sentence;
      entry.condition = cond.label;
      entry.token = static_cast<int>(token);
      entry.split = Split::kAuto;
      entry.path = fmt::format("features/{}_{}.lpcc", cond.label, token);
      corpus.manifest.push_back(std::move(entry));
      corpus.features.push_back(std::move(sample.observations));
    }
  }
  return corpus;
}

void write_synthetic_corpus(const SyntheticCorpus& corpus, const std::filesystem::path& root) {
  std::filesystem::create_directories(root / "features");
  std::filesystem::create_directories(root / "models");
  for (std::size_t i = 0; i < corpus.manifest.size(); ++i)
    save_features(root / corpus.manifest[i].path, corpus.features[i]);
  for (std::size_t c = 0; c < corpus.labels.size(); ++c)
    save_model(root / "models" / (corpus.labels[c] + ".json"), corpus.true_models[c]);
  save_manifest(root / "manifest.tsv", corpus.manifest);
}

SynthSpec synth_spec_from_json(const std::string& text) {
  try {
    const json doc = json::parse(text);
    SynthSpec spec;
    spec.seed = doc.value("seed", spec.seed);
    spec.states = doc.value("states", spec.states);
    spec.mixtures = doc.value("mixtures", spec.mixtures);
    spec.dim = doc.value("dim", spec.dim);
    spec.separation = doc.value("separation", spec.separation);
    spec.state_spread = doc.value("state_spread", spec.state_spread);
    spec.component_spread = doc.value("component_spread", spec.component_spread);
    spec.transition_strength = doc.value("transition_strength", spec.transition_strength);
    const std::string kind = doc.value("transitions", std::string("second-order"));
    if (kind == "second-order")
      spec.transitions = TransitionKind::kSecondOrder;
    else if (kind == "first-order")
      spec.transitions = TransitionKind::kFirstOrder;
    else
      throw FormatError(fmt::format("unknown transition kind '{}'", kind));
    spec.tokens = doc.value("tokens", spec.tokens);
    spec.min_frames = doc.value("min_frames", spec.min_frames);
    spec.max_frames = doc.value("max_frames", spec.max_frames);
    spec.speaker = doc.value("speaker", spec.speaker);
    spec.sentence = doc.value("sentence", spec.sentence);

    const json& conds = doc.at("conditions");
    for (std::size_t c = 0; c < conds.size(); ++c) {
      const json& entry = conds[c];
      SynthCondition cond;
      if (entry.is_string()) {
        cond.label = entry.get<std::string>();
        cond.seed = derive_seed(spec.seed, 100 + c);
      } else {
        cond.label = entry.at("label").get<std::string>();
        cond.seed = entry.value("seed", derive_seed(spec.seed, 100 + c));
        if (entry.contains("model")) {
          auto model = model_from_json(entry.at("model").dump());
          if (!std::holds_alternative<Hmm2Model>(model)) throw FormatError("synthetic models must be second order");
          cond.model = std::get<Hmm2Model>(std::move(model));
        }
      }
      spec.conditions.push_back(std::move(cond));
    }
    spec.validate();
    return spec;
  } catch (const json::exception& e) {
    throw FormatError(fmt::format("malformed synthetic spec: {}", e.what()));
  }
}

std::string synth_spec_to_json(const SynthSpec& spec) {
  json conds = json::array();
  for (const auto& c : spec.conditions) {
    json entry = {{"label", c.label}, {"seed", c.seed}};
    if (c.model) entry["model"] = json::parse(model_to_json(*c.model));
    conds.push_back(entry);
  }
  json doc = {{"conditions", conds},
              {"seed", spec.seed},
              {"states", spec.states},
              {"mixtures", spec.mixtures},
              {"dim", spec.dim},
              {"separation", spec.separation},
              {"state_spread", spec.state_spread},
              {"component_spread", spec.component_spread},
              {"transition_strength", spec.transition_strength},
              {"transitions", spec.transitions == TransitionKind::kSecondOrder ? "second-order" : "first-order"},
              {"tokens", spec.tokens},
              {"min_frames", spec.min_frames},
              {"max_frames", spec.max_frames},
              {"speaker", spec.speaker},
              {"sentence", spec.sentence}};
  return doc.dump(1) + "\n";
}

}  // namespace hmm2
