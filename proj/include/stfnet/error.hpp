#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace stfnet {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor shapes disagree with what an operation requires.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Input lies outside the mathematical domain of an operation
/// (e.g. a half-spectrum that cannot come from a real signal).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration: window sets, pooling ratios, run configs.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Two spectral bins were asked to align but are not frequency-equivalent.
class AlignError : public Error {
 public:
  using Error::Error;
};

/// Reverse-mode pass reached a node without an adjoint rule.
class GraphError : public Error {
 public:
  using Error::Error;
};

/// Malformed or unreadable data on disk.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Text input that failed to parse; carries the 1-based line number.
class ParseError : public DataError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace stfnet
