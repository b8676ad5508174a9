#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hmm2/features.hpp"

namespace hmm2 {

// Binary layout: "LPCC", version byte, T (u32 LE), D (u32 LE), then T*D
// IEEE-754 doubles, little-endian, row-major.
inline constexpr std::uint8_t kFeatureFormatVersion = 1;

std::vector<std::uint8_t> encode_features(const FeatureSequence& seq);
FeatureSequence decode_features(std::span<const std::uint8_t> bytes);

void save_features(const std::filesystem::path& path, const FeatureSequence& seq);
FeatureSequence load_features(const std::filesystem::path& path);

// One frame per line, comma separated, shortest round-trip decimal form.
std::string features_to_csv(const FeatureSequence& seq);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace hmm2
