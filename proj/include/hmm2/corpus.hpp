#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hmm2 {

enum class Split { kTrain, kTest, kAuto, kUnused };

std::string_view to_string(Split split);
Split parse_split(std::string_view text);

// One utterance in a corpus manifest. (speaker, sentence, condition, token)
// is unique within a manifest.
struct ManifestEntry {
  std::string speaker;
  std::string group;  // optional speaker group, e.g. male/female
  std::string sentence;
  std::string condition;
  int token = 1;
  Split split = Split::kAuto;
  std::string path;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

// Parses a tab-separated manifest whose header names the columns. Required:
// speaker, sentence, condition, token, path. Optional: group, split
// (absent means auto). Unknown columns are ignored and reported in
// `warnings` when given.
std::vector<ManifestEntry> parse_manifest(std::string_view text, std::vector<std::string>* warnings = nullptr);

// Canonical TSV with the columns speaker, group, sentence, condition,
// token, split, path.
std::string format_manifest(std::span<const ManifestEntry> entries);

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path,
                                         std::vector<std::string>* warnings = nullptr);
void save_manifest(const std::filesystem::path& path, std::span<const ManifestEntry> entries);

// Resolves an entry path against the directory holding the manifest.
std::filesystem::path resolve_entry_path(const std::filesystem::path& manifest, const ManifestEntry& entry);

struct SplitOptions {
  std::size_t train_count = 5;
  std::size_t test_count = 4;
  bool shuffle = false;
  std::uint64_t seed = 0;
};

// Resolves `auto` entries per (speaker, sentence, condition) group: tokens
// in index order (or a seeded shuffle of it) give the first train_count to
// training, the next test_count to testing, and mark any remainder unused.
// Explicit train/test assignments are left as they are.
std::vector<ManifestEntry> apply_split_protocol(std::vector<ManifestEntry> entries, const SplitOptions& options = {});

}  // namespace hmm2
