#pragma once

#include <stdexcept>
#include <string>

namespace argpipe {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad input data: malformed records, label strings outside the closed sets,
// overlapping spans, empty text where text is required.
struct ValidationError : Error {
  using Error::Error;
};

// Indices or spans outside the addressed sequence.
struct RangeError : Error {
  using Error::Error;
};

// Tensor/matrix dimension mismatches.
struct ShapeError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

}  // namespace argpipe
