#pragma once

#include <stdexcept>
#include <string>

namespace zpj {

// Shapes of operands do not agree.
struct DimensionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A precondition of an operation was violated by the caller.
struct ContractError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite values reached an operation that cannot handle them.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input file.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace zpj
