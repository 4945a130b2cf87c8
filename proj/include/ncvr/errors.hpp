#pragma once

#include <stdexcept>
#include <string>

namespace ncvr {

/// Malformed arguments: dimension mismatch, non-finite inputs, out-of-range indices.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A configuration or model parameter outside its admissible range.
class InvalidParameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Problem size exceeds what a dense routine is willing to allocate.
class UnsupportedSize : public std::length_error {
 public:
  using std::length_error::length_error;
};

class FactorizationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Data file content that cannot be turned into a DataSet.
class InvalidData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public InvalidData {
 public:
  ParseError(const std::string& what, std::size_t line)
      : InvalidData(what + " (line " + std::to_string(line) + ")"), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class NoReference : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NoViableStep : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ncvr
