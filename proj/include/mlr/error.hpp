#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace mlr {

// Base of every error thrown by the library. The CLI maps the concrete
// subclasses onto process exit codes.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
  using Error::Error;
};

// Input data is malformed (non-finite entries and similar).
class InvalidInput : public InvalidArgument {
public:
  using InvalidArgument::InvalidArgument;
};

class NumericalFailure : public Error {
public:
  using Error::Error;
};

// Conjugate gradients met p'Ap <= 0.
class IndefiniteSystem : public NumericalFailure {
public:
  using NumericalFailure::NumericalFailure;
};

// A restricted Laplacian has a component with no Dirichlet data.
class SingularSystem : public NumericalFailure {
public:
  using NumericalFailure::NumericalFailure;
};

// An iterative solver ran out of iterations. Carries the iterate with the
// smallest residual seen so far.
class NonConvergence : public NumericalFailure {
public:
  NonConvergence(const std::string& what, std::vector<double> best,
                 double relative_residual, int iterations)
      : NumericalFailure(what),
        best_(std::move(best)),
        relative_residual_(relative_residual),
        iterations_(iterations) {}

  const std::vector<double>& best() const noexcept { return best_; }
  double relative_residual() const noexcept { return relative_residual_; }
  int iterations() const noexcept { return iterations_; }

private:
  std::vector<double> best_;
  double relative_residual_;
  int iterations_;
};

class FormatError : public Error {
public:
  FormatError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

private:
  std::size_t offset_;
};

}  // namespace mlr
