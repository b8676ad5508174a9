#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hmm2/corpus.hpp"
#include "hmm2/features.hpp"
#include "hmm2/model.hpp"

namespace hmm2 {

// How condition models couple consecutive states.
//   kSecondOrder: a_ijk = (1 - s)/N + s [k == perm_j(i)] with a random
//     permutation per (condition, j). The induced first-order statistics
//     are uniform, so the structure is visible only to a second-order model.
//   kFirstOrder: a_ijk = a_jk = (1 - s)/N + s [k == perm(j)].
enum class TransitionKind { kSecondOrder, kFirstOrder };

struct SynthCondition {
  std::string label;
  std::uint64_t seed = 0;
  std::optional<Hmm2Model> model;  // used verbatim when set
};

// Feature-space corpus description. Emission parameters are in units of
// the (unit) component standard deviation.
struct SynthSpec {
  std::vector<SynthCondition> conditions;
  std::size_t states = 5;
  std::size_t mixtures = 5;
  std::size_t dim = 16;
  // Distance between the mean offsets of any two conditions.
  double separation = 4.0;
  // Spread of the state centers shared by all conditions.
  double state_spread = 3.0;
  // Spread of component means around their state center.
  double component_spread = 0.5;
  double transition_strength = 0.8;
  TransitionKind transitions = TransitionKind::kSecondOrder;
  std::size_t tokens = 9;
  std::size_t min_frames = 80;
  std::size_t max_frames = 200;
  // Seeds the emission layout shared by all conditions.
  std::uint64_t seed = 1;
  std::string speaker = "synth";
  std::string sentence = "s1";

  void validate() const;
};

// Builds a SynthSpec with the given labels; condition seeds derive from
// `seed`.
SynthSpec make_synth_spec(const std::vector<std::string>& labels, std::uint64_t seed);

SynthSpec synth_spec_from_json(const std::string& text);
std::string synth_spec_to_json(const SynthSpec& spec);

// True generating model of condition `index`.
Hmm2Model make_condition_model(const SynthSpec& spec, std::size_t index);

struct SyntheticCorpus {
  std::vector<std::string> labels;
  std::vector<Hmm2Model> true_models;
  std::vector<ManifestEntry> manifest;   // paths relative to the corpus root
  std::vector<FeatureSequence> features; // parallel to manifest
};

SyntheticCorpus generate_synthetic_corpus(const SynthSpec& spec);

// Writes features/<label>_<token>.lpcc, models/<label>.json and
// manifest.tsv under `root`.
void write_synthetic_corpus(const SyntheticCorpus& corpus, const std::filesystem::path& root);

}  // namespace hmm2
