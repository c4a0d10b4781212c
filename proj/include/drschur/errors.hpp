#pragma once

#include <stdexcept>
#include <string>

namespace drschur {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed numeric input (NaN/Inf, shape mismatch, asymmetric input to a
/// symmetric solver, ...).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Problem or solution file that cannot be parsed. Carries the 1-based line
/// number of the offending line (0 when the error is not tied to a line).
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A rank or non-degeneracy property that the assignment theory guarantees
/// for valid inputs did not hold numerically. `block` is the index of the
/// diagonal block being placed when the check fired (-1 if not applicable).
class AssignmentError : public Error {
 public:
  AssignmentError(int block, const std::string& what)
      : Error(block < 0 ? what : "block " + std::to_string(block) + ": " + what),
        block_(block) {}

  int block() const noexcept { return block_; }

 private:
  int block_;
};

/// The characteristic polynomial of a pencil vanished identically.
class SingularPencil : public Error {
 public:
  using Error::Error;
};

}  // namespace drschur
