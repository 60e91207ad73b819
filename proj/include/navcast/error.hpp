#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace navcast {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input too short, constant, or otherwise unusable for the requested analysis.
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent sizes, shapes, or settings supplied by the caller.
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

/// Singular systems, non-finite intermediates.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// An object is missing data it needs (e.g. integration anchors).
class InvalidStateError : public Error {
 public:
  using Error::Error;
};

/// The data does not support the requested model (e.g. no differencing order
/// makes it stationary).
class AnalysisError : public Error {
 public:
  using Error::Error;
};

/// A file could not be opened, read, or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. `line()` is 1-based, 0 when not tied to a line.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  [[nodiscard]] std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace navcast
