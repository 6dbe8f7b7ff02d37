#pragma once

#include <stdexcept>
#include <string>

namespace bifluid {

/// Input outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// An iterative or quadrature procedure failed to converge.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what, double bracket_width = 0.0)
      : std::runtime_error(what), bracket_width_(bracket_width) {}

  double bracket_width() const noexcept { return bracket_width_; }

 private:
  double bracket_width_;
};

/// A configuration violates one of the physical hypotheses of the model.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed configuration text.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int line)
      : std::runtime_error(what), line_(line) {}

  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// Explicit time step too large for the transport stencil.
class CflError : public std::runtime_error {
 public:
  CflError(const std::string& what, double suggested_dt)
      : std::runtime_error(what), suggested_dt_(suggested_dt) {}

  double suggested_dt() const noexcept { return suggested_dt_; }

 private:
  double suggested_dt_;
};

}  // namespace bifluid
