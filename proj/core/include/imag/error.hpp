#pragma once

#include <stdexcept>
#include <string>

namespace imag {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shape/dimension mismatches between tensors.
struct ShapeError : Error {
  using Error::Error;
};

// Bad flag values, config files, or caller contract violations.
struct ConfigError : Error {
  using Error::Error;
};

// Malformed corpus or record input; messages carry the line number.
struct ParseError : Error {
  using Error::Error;
};

// Filesystem failures (open/read/write).
struct IoError : Error {
  using Error::Error;
};

// Token id outside the vocabulary.
struct VocabError : Error {
  using Error::Error;
};

// Non-finite losses or values where finiteness is required.
struct NumericError : Error {
  using Error::Error;
};

// Checkpoint file incompatible with the configured architecture, or corrupt.
struct CheckpointError : Error {
  using Error::Error;
};

// A function expected to be deterministic evaluated to two different values.
struct DeterminismError : Error {
  using Error::Error;
};

}  // namespace imag
