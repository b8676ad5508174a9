#pragma once

#include <filesystem>
#include <string>
#include <variant>

#include "hmm2/model.hpp"

namespace hmm2 {

using AnyModel = std::variant<Hmm1Model, Hmm2Model>;

inline constexpr int kModelFormatVersion = 1;

inline int model_order(const AnyModel& model) { return model.index() == 0 ? 1 : 2; }

// Versioned JSON document: format_version, order, N, M, D, topology, psi,
// a2 (the N x N matrix; the transition matrix for order 1), a3 (order 2
// only), mixtures and metadata. Probabilities are linear-domain and printed
// in shortest round-trip form, so load(save(m)) reproduces m exactly.
std::string model_to_json(const Hmm1Model& model);
std::string model_to_json(const Hmm2Model& model);
std::string model_to_json(const AnyModel& model);
AnyModel model_from_json(const std::string& text);

void save_model(const std::filesystem::path& path, const AnyModel& model);
AnyModel load_model(const std::filesystem::path& path);

}  // namespace hmm2
