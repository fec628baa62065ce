#pragma once

#include <stdexcept>
#include <string>

namespace acbem {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (bad radius, parameter out of range, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A stencil needed a lattice site that is not stored in the domain.
class MissingNeighbourError : public Error {
 public:
  using Error::Error;
};

/// An interface site has continuum neighbours in a pattern the reconstruction cannot handle.
class A0ViolationError : public Error {
 public:
  A0ViolationError(const std::string& what, int i, int j) : Error(what), i_(i), j_(j) {}
  int site_i() const { return i_; }
  int site_j() const { return j_; }

 private:
  int i_;
  int j_;
};

class MeshError : public Error {
 public:
  using Error::Error;
};

class SingularSystemError : public Error {
 public:
  using Error::Error;
};

class NonConvergenceError : public Error {
 public:
  using Error::Error;
};

class IndefiniteHessianError : public Error {
 public:
  using Error::Error;
};

class GaugeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, int line = 0) : Error(what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

}  // namespace acbem
