#pragma once

#include <stdexcept>
#include <string>

namespace mixdendro {

// Bad arguments: wrong index, wrong kernel, malformed configuration.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DimensionMismatch : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

// Raised when a cell of the Voronoi partition is larger than the
// tabulated range of the weak-identifiability order.
class UnsupportedOrder : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

// Malformed CSV or JSON.
class ParseError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mixdendro
