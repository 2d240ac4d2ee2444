#pragma once

#include <stdexcept>
#include <string>

namespace dosessr {

// Invalid arguments or violated type invariants (CLI exit code 2).
class DomainError : public std::invalid_argument {
public:
    explicit DomainError(const std::string& what) : std::invalid_argument(what) {}
};

// Iterative numerics failed to converge (CLI exit code 3).
class ConvergenceError : public std::runtime_error {
public:
    explicit ConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

// Numerically invalid inputs to the estimators, e.g. a covariance that is
// not positive semi-definite (CLI exit code 3).
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

class UnsupportedDimensionError : public DomainError {
public:
    explicit UnsupportedDimensionError(const std::string& what) : DomainError(what) {}
};

class InsufficientSamplesError : public DomainError {
public:
    explicit InsufficientSamplesError(const std::string& what) : DomainError(what) {}
};

}  // namespace dosessr
