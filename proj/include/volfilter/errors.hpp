#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace volfilter {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of a model function.
class DomainError : public Error {
 public:
  using Error::Error;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

/// Zero variance or otherwise degenerate statistical input.
class DegenerateInput : public Error {
 public:
  using Error::Error;
};

/// h(Y) == 0 somewhere along a latent path, so the path score is undefined.
class SingularLikelihood : public Error {
 public:
  using Error::Error;
};

class EstimationFailed : public Error {
 public:
  using Error::Error;
};

/// Input data violates a documented invariant (bad price, bad parameter).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A text row could not be parsed. Carries the 1-based line number.
class ParseError : public ValidationError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : ValidationError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// File layout does not match the expected series type.
class SchemaError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace volfilter
