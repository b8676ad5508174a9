#include "hmm2/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <set>
#include <tuple>

#include <fmt/format.h>

#include "hmm2/error.hpp"
#include "hmm2/feature_io.hpp"
#include "hmm2/random.hpp"

namespace hmm2 {

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kTest: return "test";
    case Split::kAuto: return "auto";
    case Split::kUnused: return "unused";
  }
  return "auto";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::kTrain;
  if (text == "test") return Split::kTest;
  if (text == "auto" || text.empty()) return Split::kAuto;
  if (text == "unused") return Split::kUnused;
  throw FormatError(fmt::format("unknown split '{}'", text));
}

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.push_back(line);
    start = end + 1;
  }
  return out;
}

using EntryKey = std::tuple<std::string, std::string, std::string, int>;

EntryKey key_of(const ManifestEntry& e) { return {e.speaker, e.sentence, e.condition, e.token}; }

}  // namespace

std::vector<ManifestEntry> parse_manifest(std::string_view text, std::vector<std::string>* warnings) {
  auto lines = lines_of(text);
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) throw FormatError("manifest is empty");

  const auto header = split_tabs(lines.front());
  std::map<std::string, std::size_t, std::less<>> column;
  static const std::set<std::string_view> known = {"speaker", "group", "sentence", "condition",
                                                    "token",   "split", "path"};
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (!known.contains(header[c])) {
      if (warnings) warnings->push_back(fmt::format("ignoring unknown manifest column '{}'", header[c]));
      continue;
    }
    column.emplace(std::string(header[c]), c);
  }
  for (const char* required : {"speaker", "sentence", "condition", "token", "path"}) {
    if (!column.contains(required)) throw FormatError(fmt::format("manifest lacks required column '{}'", required));
  }

  std::vector<ManifestEntry> entries;
  std::map<EntryKey, std::size_t> seen;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    const auto fields = split_tabs(lines[li]);
    auto field = [&](std::string_view name) -> std::string_view {
      const auto it = column.find(name);
      if (it == column.end()) return {};
      if (it->second >= fields.size())
        throw FormatError(fmt::format("manifest line {} has too few fields", li + 1));
      return fields[it->second];
    };

    ManifestEntry e;
    e.speaker = field("speaker");
    e.group = field("group");
    e.sentence = field("sentence");
    e.condition = field("condition");
    const auto token_text = field("token");
    const auto [ptr, ec] = std::from_chars(token_text.data(), token_text.data() + token_text.size(), e.token);
    if (ec != std::errc() || ptr != token_text.data() + token_text.size() || e.token < 1)
      throw FormatError(fmt::format("manifest line {}: token '{}' is not a positive integer", li + 1, token_text));
    e.split = parse_split(field("split"));
    e.path = field("path");
    if (e.path.empty()) throw FormatError(fmt::format("manifest line {}: empty path", li + 1));
    if (e.condition.empty()) throw FormatError(fmt::format("manifest line {}: empty condition", li + 1));

    const auto [it, inserted] = seen.emplace(key_of(e), li + 1);
    if (!inserted)
      throw FormatError(fmt::format("manifest line {} duplicates line {}: speaker '{}', sentence '{}', condition '{}', token {}",
                                    li + 1, it->second, e.speaker, e.sentence, e.condition, e.token));
    entries.push_back(std::move(e));
  }
  return entries;
}

std::string format_manifest(std::span<const ManifestEntry> entries) {
  std::string out = "speaker\tgroup\tsentence\tcondition\ttoken\tsplit\tpath\n";
  for (const auto& e : entries)
    out += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\n", e.speaker, e.group, e.sentence, e.condition, e.token,
                       to_string(e.split), e.path);
  return out;
}

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path, std::vector<std::string>* warnings) {
  try {
    return parse_manifest(read_text_file(path), warnings);
  } catch (const FormatError& e) {
    throw FormatError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void save_manifest(const std::filesystem::path& path, std::span<const ManifestEntry> entries) {
  write_text_file(path, format_manifest(entries));
}

std::filesystem::path resolve_entry_path(const std::filesystem::path& manifest, const ManifestEntry& entry) {
  const std::filesystem::path p(entry.path);
  if (p.is_absolute()) return p;
  return manifest.parent_path() / p;
}

std::vector<ManifestEntry> apply_split_protocol(std::vector<ManifestEntry> entries, const SplitOptions& options) {
  std::map<std::tuple<std::string, std::string, std::string>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].split != Split::kAuto) continue;
    groups[{entries[i].speaker, entries[i].sentence, entries[i].condition}].push_back(i);
  }

  const std::size_t needed = options.train_count + options.test_count;
  std::size_t group_index = 0;
  for (auto& [key, members] : groups) {
    if (members.size() < needed)
      throw DataError(fmt::format("speaker '{}', sentence '{}', condition '{}' has {} tokens, split needs {}",
                                  std::get<0>(key), std::get<1>(key), std::get<2>(key), members.size(), needed));
    std::sort(members.begin(), members.end(),
              [&](std::size_t a, std::size_t b) { return entries[a].token < entries[b].token; });
    if (options.shuffle) {
      Rng rng(derive_seed(options.seed, group_index));
      for (std::size_t i = members.size(); i > 1; --i) std::swap(members[i - 1], members[rng.index(i)]);
    }
    for (std::size_t r = 0; r < members.size(); ++r) {
      entries[members[r]].split =
          r < options.train_count ? Split::kTrain : (r < needed ? Split::kTest : Split::kUnused);
    }
    ++group_index;
  }
  return entries;
}

}  // namespace hmm2
