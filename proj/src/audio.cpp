#include "hmm2/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>
#include <string>
#include <string_view>

#include <fmt/format.h>

#include "hmm2/error.hpp"

namespace hmm2 {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t read_u16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

std::uint32_t read_u32(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) |
         (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

bool tag_is(std::span<const std::uint8_t> b, std::size_t at, std::string_view tag) {
  return std::memcmp(b.data() + at, tag.data(), 4) == 0;
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

void put_tag(std::vector<std::uint8_t>& out, std::string_view tag) {
  out.insert(out.end(), tag.begin(), tag.end());
}

}  // namespace

void AudioClip::validate() const {
  if (samples.empty()) throw DataError("audio clip has no samples");
  if (sample_rate_hz <= 0) throw DataError("sample rate must be positive");
  for (double s : samples) {
    if (!std::isfinite(s) || s < -1.0 || s > 1.0)
      throw DataError("audio samples must be finite and within [-1, 1]");
  }
}

AudioClip decode_pcm16_wav(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || !tag_is(bytes, 0, "RIFF") || !tag_is(bytes, 8, "WAVE"))
    throw FormatError("not a RIFF/WAVE file");

  bool have_fmt = false;
  std::uint16_t channels = 0;
  std::uint16_t bits = 0;
  std::uint32_t rate = 0;
  std::span<const std::uint8_t> data;
  bool have_data = false;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t size = read_u32(bytes, pos + 4);
    const std::size_t body = pos + 8;
    if (size > bytes.size() - body)
      throw FormatError(fmt::format("chunk at offset {} runs past end of file", pos));
    if (tag_is(bytes, pos, "fmt ")) {
      if (size < 16) throw FormatError("fmt chunk too short");
      std::uint16_t format = read_u16(bytes, body);
      channels = read_u16(bytes, body + 2);
      rate = read_u32(bytes, body + 4);
      bits = read_u16(bytes, body + 14);
      if (format == kFormatExtensible) {
        // The sub-format GUID starts with the plain format tag.
        if (size < 40) throw FormatError("extensible fmt chunk too short");
        format = read_u16(bytes, body + 24);
      }
      if (format != kFormatPcm) throw FormatError(fmt::format("unsupported encoding {} (PCM required)", format));
      have_fmt = true;
    } else if (tag_is(bytes, pos, "data")) {
      data = bytes.subspan(body, size);
      have_data = true;
    }
    pos = body + size + (size & 1u);
  }

  if (!have_fmt) throw FormatError("missing fmt chunk");
  if (!have_data) throw FormatError("missing data chunk");
  if (bits != 16) throw FormatError(fmt::format("unsupported bit depth {} (16 required)", bits));
  if (channels != 1) throw FormatError(fmt::format("unsupported channel count {} (mono required)", channels));
  if (rate == 0) throw FormatError("sample rate is zero");

  AudioClip clip;
  clip.sample_rate_hz = static_cast<int>(rate);
  clip.samples.resize(data.size() / 2);
  for (std::size_t n = 0; n < clip.samples.size(); ++n) {
    const auto v = static_cast<std::int16_t>(read_u16(data, 2 * n));
    clip.samples[n] = static_cast<double>(v) / 32768.0;
  }
  return clip;
}

std::vector<std::uint8_t> encode_pcm16_wav(std::span<const double> samples, int sample_rate_hz) {
  const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, kFormatPcm);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(sample_rate_hz));
  put_u32(out, static_cast<std::uint32_t>(sample_rate_hz) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  put_tag(out, "data");
  put_u32(out, data_bytes);
  for (double s : samples) {
    const double scaled = std::clamp(std::round(s * 32768.0), -32768.0, 32767.0);
    put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)));
  }
  return out;
}

void FrameParams::validate() const {
  if (!(window_ms > 0.0) || !(shift_ms > 0.0)) throw DataError("window and shift must be positive");
  if (shift_ms > window_ms) throw DataError("frame shift must not exceed the window length");
  if (lpc_order < 1) throw DataError("LPC order must be at least 1");
  if (cepstral_order < 1) throw DataError("cepstral order must be at least 1");
  if (!(pre_emphasis >= 0.0 && pre_emphasis < 1.0)) throw DataError("pre-emphasis must lie in [0, 1)");
}

std::size_t window_length(const FrameParams& params, int sample_rate_hz) {
  return static_cast<std::size_t>(std::lround(params.window_ms * sample_rate_hz / 1000.0));
}

std::size_t shift_length(const FrameParams& params, int sample_rate_hz) {
  return static_cast<std::size_t>(std::lround(params.shift_ms * sample_rate_hz / 1000.0));
}

std::vector<double> hamming_window(std::size_t length) {
  std::vector<double> w(length, 1.0);
  if (length < 2) return w;
  const double denom = static_cast<double>(length - 1);
  for (std::size_t n = 0; n < length; ++n)
    w[n] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / denom);
  return w;
}

std::vector<std::vector<double>> frame_and_window(const AudioClip& clip, const FrameParams& params) {
  params.validate();
  const std::size_t win = window_length(params, clip.sample_rate_hz);
  const std::size_t hop = shift_length(params, clip.sample_rate_hz);
  if (win < 2 || hop < 1) throw DataError("window or shift shorter than one sample at this rate");
  if (clip.samples.size() < win)
    throw DataError(fmt::format("clip has {} samples, shorter than one {}-sample window",
                                clip.samples.size(), win));

  std::vector<double> signal = clip.samples;
  if (params.pre_emphasis > 0.0) {
    for (std::size_t n = signal.size() - 1; n > 0; --n)
      signal[n] -= params.pre_emphasis * clip.samples[n - 1];
  }

  const std::vector<double> window = hamming_window(win);
  const std::size_t count = (signal.size() - win) / hop + 1;
  std::vector<std::vector<double>> frames(count, std::vector<double>(win));
  for (std::size_t t = 0; t < count; ++t) {
    const double* src = signal.data() + t * hop;
    for (std::size_t n = 0; n < win; ++n) frames[t][n] = src[n] * window[n];
  }
  return frames;
}

std::vector<double> autocorrelate(std::span<const double> frame, std::size_t max_lag) {
  if (max_lag >= frame.size())
    throw DataError(fmt::format("lag {} not below frame length {}", max_lag, frame.size()));
  std::vector<double> r(max_lag + 1, 0.0);
  for (std::size_t k = 0; k <= max_lag; ++k) {
    double acc = 0.0;
    for (std::size_t n = k; n < frame.size(); ++n) acc += frame[n] * frame[n - k];
    r[k] = acc;
  }
  return r;
}

LpcResult levinson_durbin(std::span<const double> r) {
  if (r.empty()) throw DataError("autocorrelation sequence is empty");
  if (!(r[0] > 0.0)) throw NumericError("zero-energy frame (r_0 <= 0)");
  const std::size_t order = r.size() - 1;

  LpcResult out;
  out.coefficients.assign(order, 0.0);
  out.reflection.assign(order, 0.0);
  std::vector<double>& a = out.coefficients;
  std::vector<double> prev(order, 0.0);
  double energy = r[0];

  for (std::size_t i = 1; i <= order; ++i) {
    double acc = r[i];
    for (std::size_t j = 1; j < i; ++j) acc += a[j - 1] * r[i - j];
    const double k = -acc / energy;
    if (!(std::abs(k) < 1.0))
      throw NumericError(fmt::format("unstable frame: reflection coefficient {} at stage {}", k, i));
    out.reflection[i - 1] = k;
    std::copy(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(i - 1), prev.begin());
    for (std::size_t j = 1; j < i; ++j) a[j - 1] = prev[j - 1] + k * prev[i - j - 1];
    a[i - 1] = k;
    energy *= (1.0 - k * k);
  }
  out.residual_energy = energy;
  return out;
}

std::vector<double> lpc_to_lpcc(std::span<const double> lpc, int cepstral_order) {
  if (cepstral_order < 1) throw DataError("cepstral order must be at least 1");
  const auto p = static_cast<int>(lpc.size());
  const auto q = cepstral_order;
  auto a = [&](int j) { return j >= 1 && j <= p ? lpc[static_cast<std::size_t>(j - 1)] : 0.0; };

  std::vector<double> c(static_cast<std::size_t>(q) + 1, 0.0);  // c[0] unused
  for (int m = 1; m <= q; ++m) {
    double acc = 0.0;
    for (int k = std::max(1, m - p); k < m; ++k) acc += k * c[static_cast<std::size_t>(k)] * a(m - k);
    c[static_cast<std::size_t>(m)] = -a(m) - acc / m;
  }
  return {c.begin() + 1, c.end()};
}

FeatureSequence extract_features(const AudioClip& clip, const FrameParams& params) {
  clip.validate();
  const auto frames = frame_and_window(clip, params);
  const auto q = static_cast<std::size_t>(params.cepstral_order);
  const auto p = static_cast<std::size_t>(params.lpc_order);
  if (p >= frames.front().size()) throw DataError("LPC order must be below the window length");

  FeatureSequence out(frames.size(), q);
  std::size_t degenerate = 0;
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const auto r = autocorrelate(frames[t], p);
    if (r[0] <= kSilentFrameEnergy) {
      ++degenerate;
      continue;
    }
    try {
      const auto lpc = levinson_durbin(r);
      const auto cep = lpc_to_lpcc(lpc.coefficients, params.cepstral_order);
      std::copy(cep.begin(), cep.end(), out.row(t).begin());
    } catch (const NumericError&) {
      ++degenerate;
    }
  }
  out.provenance.params = params;
  out.provenance.degenerate_frames = degenerate;
  return out;
}

}  // namespace hmm2
