#pragma once

#include <filesystem>
#include <vector>

#include "hmm2/classifier.hpp"

namespace hmm2 {

// A trained bank directory holds bank.json (index of scopes, labels and
// model files) plus one model JSON per (scope, label).
void save_banks(const std::filesystem::path& root, const std::vector<ConditionBank>& banks);
std::vector<ConditionBank> load_banks(const std::filesystem::path& root);

// Bank for a (speaker, sentence) scope, or the pooled bank when present.
const ConditionBank* find_bank(const std::vector<ConditionBank>& banks, const std::string& speaker,
                               const std::string& sentence);

}  // namespace hmm2
