#include "hmm2/feature_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include <fmt/format.h>

#include "hmm2/error.hpp"

namespace hmm2 {

FeatureSequence::FeatureSequence(std::size_t frames, std::size_t dim)
    : frames_(frames), dim_(dim), values_(frames * dim, 0.0) {}

FeatureSequence::FeatureSequence(std::size_t frames, std::size_t dim, std::vector<double> values)
    : frames_(frames), dim_(dim), values_(std::move(values)) {
  if (values_.size() != frames_ * dim_)
    throw DataError(fmt::format("feature matrix needs {}x{} values, got {}", frames_, dim_, values_.size()));
}

void FeatureSequence::validate() const {
  if (frames_ < 1 || dim_ < 1) throw DataError("feature sequence must have T >= 1 and D >= 1");
  for (double v : values_) {
    if (!std::isfinite(v)) throw DataError("feature sequence contains a non-finite value");
  }
}

namespace {

constexpr char kMagic[4] = {'L', 'P', 'C', 'C'};
constexpr std::size_t kHeaderBytes = 4 + 1 + 4 + 4;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[at + static_cast<std::size_t>(i)];
  return v;
}

}  // namespace

std::vector<std::uint8_t> encode_features(const FeatureSequence& seq) {
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderBytes + seq.values().size() * 8);
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  out.push_back(kFeatureFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(seq.frames()));
  put_u32(out, static_cast<std::uint32_t>(seq.dim()));
  for (double v : seq.values()) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int shift = 0; shift < 64; shift += 8) out.push_back(static_cast<std::uint8_t>(bits >> shift));
  }
  return out;
}

FeatureSequence decode_features(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderBytes) throw FormatError("feature file truncated in header");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("bad magic bytes (expected LPCC)");
  if (bytes[4] != kFeatureFormatVersion)
    throw FormatError(fmt::format("unsupported feature format version {}", bytes[4]));
  const std::size_t frames = get_u32(bytes, 5);
  const std::size_t dim = get_u32(bytes, 9);
  const std::size_t count = frames * dim;
  if (bytes.size() != kHeaderBytes + count * 8)
    throw FormatError(fmt::format("feature payload has {} bytes, expected {}", bytes.size() - kHeaderBytes,
                                  count * 8));
  std::vector<double> values(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t bits = 0;
    const std::size_t at = kHeaderBytes + i * 8;
    for (int b = 7; b >= 0; --b) bits = (bits << 8) | bytes[at + static_cast<std::size_t>(b)];
    values[i] = std::bit_cast<double>(bits);
  }
  return FeatureSequence(frames, dim, std::move(values));
}

void save_features(const std::filesystem::path& path, const FeatureSequence& seq) {
  write_file_bytes(path, encode_features(seq));
}

FeatureSequence load_features(const std::filesystem::path& path) {
  auto seq = decode_features(read_file_bytes(path));
  seq.provenance.source_id = path.string();
  return seq;
}

std::string features_to_csv(const FeatureSequence& seq) {
  std::string out;
  for (std::size_t t = 0; t < seq.frames(); ++t) {
    const auto row = seq.row(t);
    for (std::size_t d = 0; d < row.size(); ++d) {
      if (d) out += ',';
      out += fmt::format("{}", row[d]);
    }
    out += '\n';
  }
  return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open {}", path.string()));
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(fmt::format("cannot write {}", path.string()));
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError(fmt::format("write failed for {}", path.string()));
}

std::string read_text_file(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return {bytes.begin(), bytes.end()};
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace hmm2
