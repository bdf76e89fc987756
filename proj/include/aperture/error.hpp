#pragma once

#include <stdexcept>
#include <string>

namespace aperture {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller supplied an argument that violates a precondition or type invariant.
/// Maps to CLI exit code 2.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class InvalidConfiguration : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class OutOfRange : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Config/text parse failure. `line` is 1-based, 0 when not applicable.
class SyntaxError : public ValidationError {
 public:
  SyntaxError(const std::string& what, int line)
      : ValidationError(what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

// Runtime failures (exit code 1).
class EmptyInput : public Error {
 public:
  using Error::Error;
};

class AssociationFailure : public Error {
 public:
  using Error::Error;
};

class AlignmentError : public Error {
 public:
  using Error::Error;
};

class TooFewCorrespondences : public Error {
 public:
  using Error::Error;
};

class LoadError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace aperture
