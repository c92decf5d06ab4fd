#pragma once

#include <stdexcept>
#include <string>

namespace sshpb {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand dimensions do not match, or an index is out of range.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Physical parameters violate a hard constraint (or the coupling regime, when enforced).
class ParamError : public Error {
 public:
  using Error::Error;
};

/// The linear solve or time integration failed.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// A computed density matrix is not Hermitian, unit-trace and positive semidefinite.
class InvariantError : public Error {
 public:
  using Error::Error;
};

/// Malformed or invalid run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// An output file could not be written or an input file read.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace sshpb
