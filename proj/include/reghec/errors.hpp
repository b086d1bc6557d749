#pragma once

#include <stdexcept>
#include <string>

namespace reghec {

// Thrown when pose geometry cannot determine the unknown transform
// (single motion, pure translations, parallel rotation axes).
class DegenerateGeometryError : public std::runtime_error {
 public:
  explicit DegenerateGeometryError(const std::string& what) : std::runtime_error(what) {}
};

// File-format errors; message carries path and 1-based line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& path, long line, const std::string& what)
      : std::runtime_error(path + ":" + std::to_string(line) + ": " + what),
        line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

// Operation called on an object in a state that cannot serve it
// (e.g. nearest-neighbor query against an empty index).
class InvalidStateError : public std::logic_error {
 public:
  explicit InvalidStateError(const std::string& what) : std::logic_error(what) {}
};

// A floating-point computation that should succeed on well-posed input
// failed (e.g. a covariance factorization); the message says what to adjust.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace reghec
