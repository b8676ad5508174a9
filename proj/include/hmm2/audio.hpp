#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hmm2/features.hpp"

namespace hmm2 {

struct AudioClip {
  std::vector<double> samples;  // in [-1, 1]
  int sample_rate_hz = 16000;

  void validate() const;
};

// Decodes a RIFF/WAVE file holding mono 16-bit linear PCM. Sample v maps to
// v / 32768. Throws FormatError on anything else.
AudioClip decode_pcm16_wav(std::span<const std::uint8_t> bytes);

// Encodes mono 16-bit PCM (samples clamped to the representable range).
std::vector<std::uint8_t> encode_pcm16_wav(std::span<const double> samples, int sample_rate_hz);

// Window and shift lengths in samples for a given rate.
std::size_t window_length(const FrameParams& params, int sample_rate_hz);
std::size_t shift_length(const FrameParams& params, int sample_rate_hz);

// Symmetric Hamming window, 0.54 - 0.46 cos(2 pi n / (L - 1)).
std::vector<double> hamming_window(std::size_t length);

// Splits the clip into overlapping Hamming-weighted frames. Frame t covers
// samples [t * shift, t * shift + window). Pre-emphasis, when enabled, is
// applied to the whole clip before framing.
std::vector<std::vector<double>> frame_and_window(const AudioClip& clip, const FrameParams& params);

// r_k = sum_{n=k}^{L-1} x[n] x[n-k] for k = 0..max_lag.
std::vector<double> autocorrelate(std::span<const double> frame, std::size_t max_lag);

struct LpcResult {
  std::vector<double> coefficients;  // a_1..a_p of A(z) = 1 + sum a_k z^-k
  std::vector<double> reflection;    // k_1..k_p
  double residual_energy = 0.0;
};

// Levinson-Durbin recursion on r_0..r_p. Throws NumericError when r_0 <= 0
// or a reflection coefficient reaches magnitude 1.
LpcResult levinson_durbin(std::span<const double> r);

// Cepstrum of the all-pole model 1/A(z), coefficients c_1..c_Q (gain term
// c_0 excluded).
std::vector<double> lpc_to_lpcc(std::span<const double> lpc, int cepstral_order);

// Frames whose energy is at or below this are treated as silent.
inline constexpr double kSilentFrameEnergy = 1e-12;

// Full LPCC front end. Silent or unstable frames produce an all-zero row and
// are counted in provenance.degenerate_frames.
FeatureSequence extract_features(const AudioClip& clip, const FrameParams& params);

}  // namespace hmm2
