#pragma once

#include <stdexcept>
#include <string>

namespace infogeo {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A documented precondition of an operation was violated by the caller.
class PreconditionError : public Error {
public:
  using Error::Error;
};

/// Two fields (or a field and an operator) live on different grids.
class GridMismatch : public PreconditionError {
public:
  GridMismatch() : PreconditionError("fields are defined on different grids") {}
};

/// A linear solve, factorization or eigen iteration did not converge.
class SolverError : public Error {
public:
  using Error::Error;
};

/// Curve tracing could not classify a trajectory.
class TraceError : public Error {
public:
  using Error::Error;
};

}  // namespace infogeo
