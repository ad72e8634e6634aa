#pragma once

#include <stdexcept>
#include <string>

namespace subhess {

// Base class for every error raised by the library. The CLI maps
// RejectedInput (and its subclasses) to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class IndexOutOfRange : public Error {
 public:
  using Error::Error;
};

// A precondition of an operation was not met by the caller's input. This is
// never a counterexample to a mathematical claim.
class RejectedInput : public Error {
 public:
  using Error::Error;
};

class ParseError : public RejectedInput {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : RejectedInput(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class SingularPoint : public Error {
 public:
  using Error::Error;
};

class UnreachableWithinBudget : public Error {
 public:
  using Error::Error;
};

}  // namespace subhess
