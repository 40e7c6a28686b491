#pragma once

#include <stdexcept>
#include <string>

namespace hebbsal {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// File could not be opened, read, or written.
struct IoError : Error {
  using Error::Error;
};

// File was readable but is not in a supported or well-formed format.
struct FormatError : Error {
  using Error::Error;
};

// Inputs are well-formed but inconsistent (dimensions, counts, config ranges).
struct ValidationError : Error {
  using Error::Error;
};

// No principal component exists for the given samples.
struct DegenerateInput : Error {
  using Error::Error;
};

}  // namespace hebbsal
