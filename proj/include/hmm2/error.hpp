#pragma once

#include <stdexcept>
#include <string>

namespace hmm2 {

// Base for every failure raised by the library. The CLI maps the concrete
// category onto its exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or unsupported file content (WAV, LPCC, model JSON, manifest).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Inputs that are well formed but violate an operation's contract:
// dimension mismatches, empty corpora, unknown labels, short sequences.
class DataError : public Error {
 public:
  using Error::Error;
};

// Numerical dead ends: unstable LPC frames, utterances with no admissible
// state path, zero baselines.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace hmm2
