#pragma once

#include <stdexcept>
#include <string>

namespace seqstop {

// Argument outside the mathematical domain of an operation.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// Root finder or optimizer failed to bracket or converge.
struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Quadrature did not reach its tolerance.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Requested computation is not available for this stopping rule.
struct UnsupportedError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace seqstop
