#pragma once

#include <stdexcept>
#include <string>

namespace cmc {

// Domain violations (bad m/k/H, out-of-chart points, ...). CLI exit code 2.
struct DomainError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// epsilon == 0 passed to a length operation.
struct FlatCaseError : DomainError {
    using DomainError::DomainError;
};

// Wrong sub/super/critical regime for the requested quantity.
struct RegimeError : DomainError {
    using DomainError::DomainError;
};

// Argument outside the admissible range of an otherwise valid regime.
struct RangeError : DomainError {
    using DomainError::DomainError;
};

// Numerical failures (non-convergence, degenerate meshes, ...). CLI exit code 3.
struct SolveError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct QuadratureError : SolveError {
    using SolveError::SolveError;
};

}  // namespace cmc
