#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lexpand {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file. `line()` is 1-based, 0 when the error is not tied to a line.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& message)
      : Error(source + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " + message),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// A statistic has no defined value for the given input (e.g. Kendall tau of a constant list).
class UndefinedValueError : public Error {
 public:
  using Error::Error;
};

}  // namespace lexpand
