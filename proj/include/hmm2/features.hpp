#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace hmm2 {

// Short-time analysis settings. Defaults are 16 kHz speech settings: a 30 ms
// Hamming window advanced every 5 ms, LPC order 12, 16 cepstral coefficients.
struct FrameParams {
  double window_ms = 30.0;
  double shift_ms = 5.0;
  int lpc_order = 12;
  int cepstral_order = 16;
  double pre_emphasis = 0.0;

  void validate() const;
};

// Where a feature sequence came from; not part of the binary file format.
struct FeatureProvenance {
  std::string source_id;
  FrameParams params;
  std::size_t degenerate_frames = 0;
};

// T x D observation matrix stored row-major; row t is the observation at
// frame t.
class FeatureSequence {
 public:
  FeatureSequence() = default;
  FeatureSequence(std::size_t frames, std::size_t dim);
  FeatureSequence(std::size_t frames, std::size_t dim, std::vector<double> values);

  std::size_t frames() const { return frames_; }
  std::size_t dim() const { return dim_; }
  bool empty() const { return frames_ == 0; }

  std::span<const double> row(std::size_t t) const {
    return {values_.data() + t * dim_, dim_};
  }
  std::span<double> row(std::size_t t) { return {values_.data() + t * dim_, dim_}; }
  double operator()(std::size_t t, std::size_t d) const { return values_[t * dim_ + d]; }
  double& operator()(std::size_t t, std::size_t d) { return values_[t * dim_ + d]; }

  std::span<const double> values() const { return values_; }

  // Throws DataError unless T >= 1, D >= 1 and all entries are finite.
  void validate() const;

  FeatureProvenance provenance;

  friend bool operator==(const FeatureSequence& a, const FeatureSequence& b) {
    return a.frames_ == b.frames_ && a.dim_ == b.dim_ && a.values_ == b.values_;
  }

 private:
  std::size_t frames_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> values_;
};

}  // namespace hmm2
