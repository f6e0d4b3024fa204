#pragma once

#include <stdexcept>
#include <string>

namespace spconf {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (bad dimensions, out-of-range
/// tuning value, empty input, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A design or basis matrix does not have full column rank.
class RankDeficientError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. `line()` is 1-based, 0 when not tied to a line.
class InputError : public Error {
 public:
  InputError(const std::string& what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace spconf
