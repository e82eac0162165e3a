#pragma once

#include <stdexcept>
#include <string>

namespace cdpr {

// Error taxonomy maps onto CLI exit codes: validation -> 2,
// numerical failure -> 3, I/O -> 4.

struct InvalidInput : std::runtime_error {
  explicit InvalidInput(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericalFailure : std::runtime_error {
  explicit NumericalFailure(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised when the global-phase correlation sum vanishes and no alignment
// angle is defined; callers report the unaligned estimate instead.
struct AlignmentUndefined : NumericalFailure {
  explicit AlignmentUndefined(const std::string& msg) : NumericalFailure(msg) {}
};

}  // namespace cdpr
