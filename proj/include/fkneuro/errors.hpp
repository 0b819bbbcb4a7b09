#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace fkneuro {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file. Carries the 1-based line number of the offending line.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Mesh or graph connectivity that violates a structural invariant.
class TopologyError : public Error {
 public:
  using Error::Error;
};

/// Invalid parameter values (configuration, operation preconditions).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Linear solver failure. Keeps the relative residual history of the failed attempt.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, std::vector<double> residuals)
      : Error(what), residuals_(std::move(residuals)) {}
  const std::vector<double>& residuals() const noexcept { return residuals_; }

 private:
  std::vector<double> residuals_;
};

}  // namespace fkneuro
