#pragma once

#include <stdexcept>
#include <string>

namespace lamegap {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Mesh construction produced a degenerate or inverted cell.
class MeshQualityError : public Error {
 public:
  MeshQualityError(const std::string& what, double x, double y)
      : Error(what), x_(x), y_(y) {}
  double x() const { return x_; }
  double y() const { return y_; }

 private:
  double x_;
  double y_;
};

/// Requested discretization exceeds the configured memory budget.
class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

/// Linear solver failure: singular stiffness or no convergence.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// Gram matrix smallest eigenvalue fell below the SPD floor.
class SpdFloorError : public Error {
 public:
  SpdFloorError(const std::string& what, double smallest_eigenvalue)
      : Error(what), smallest_(smallest_eigenvalue) {}
  double smallest_eigenvalue() const { return smallest_; }

 private:
  double smallest_;
};

/// A lower-bound preset was requested outside its hypotheses.
class HypothesisViolation : public Error {
 public:
  HypothesisViolation(const std::string& condition, const std::string& what)
      : Error(what), condition_(condition) {}
  const std::string& condition() const { return condition_; }

 private:
  std::string condition_;
};

}  // namespace lamegap
