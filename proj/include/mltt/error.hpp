#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mltt {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A constructed object violates one of its invariants; the message names the witness.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// An enumeration or materialization exceeded its configured size limit.
class SizeLimitExceeded : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& what)
      : Error(std::to_string(line) + ":" + std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

}  // namespace mltt
