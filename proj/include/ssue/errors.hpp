// Error taxonomy shared by every module.
//
// ConfigError and ContractError describe bad inputs; the numerical family
// describes failures that arise while running an otherwise valid model. The
// CLI maps the first group to exit code 2 and the second to exit code 3.
#pragma once

#include <stdexcept>
#include <string>

namespace ssue {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed configuration or dimension mismatch detected at construction.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// A documented precondition of an operation was violated by the caller.
class ContractError : public Error {
public:
  using Error::Error;
};

/// Factorization, inversion or PSD check failed even after jitter.
class NumericalError : public Error {
public:
  using Error::Error;
};

/// Measurement gradient undefined at the evaluation point (range map at a
/// sensor position).
class SingularGradientError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

/// Every hypothesis received zero evidence; the weight recursion is undefined.
class DegenerateEvidenceError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

/// Output sequence carries no information (all zero); every candidate fits.
class ExcitationError : public Error {
public:
  using Error::Error;
};

/// No candidate on the grid explains the output sequence within tolerance.
class NoMatchError : public Error {
public:
  using Error::Error;
};

} // namespace ssue
