#pragma once

#include <stdexcept>
#include <string>

namespace gapx {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
 public:
  using Error::Error;
};

/// A density (or its inverse) is not finite at a quadrature node.
class SingularDensity : public Error {
 public:
  SingularDensity(const std::string& what, double lambda)
      : Error(what), lambda_(lambda) {}
  double lambda() const noexcept { return lambda_; }

 private:
  double lambda_;
};

class InvalidPattern : public Error {
 public:
  using Error::Error;
};

class InsufficientLag : public Error {
 public:
  InsufficientLag(const std::string& what, int lag) : Error(what), lag_(lag) {}
  int lag() const noexcept { return lag_; }

 private:
  int lag_;
};

class NonInvertibleOperator : public Error {
 public:
  NonInvertibleOperator(const std::string& what, double cond)
      : Error(what), cond_(cond) {}
  double condition_number() const noexcept { return cond_; }

 private:
  double cond_;
};

class InternalConsistency : public Error {
 public:
  using Error::Error;
};

class DegenerateObservations : public Error {
 public:
  using Error::Error;
};

class SimulationMethod : public Error {
 public:
  using Error::Error;
};

class InfeasibleClass : public Error {
 public:
  using Error::Error;
};

class UnsupportedClass : public Error {
 public:
  using Error::Error;
};

}  // namespace gapx
