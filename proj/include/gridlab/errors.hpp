#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gridlab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid construction parameters or experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Coordinate outside the grid.
class BoundsError : public Error {
 public:
  using Error::Error;
};

/// A caller broke an operation's precondition (bad action index, moving
/// from an empty slot, mismatched shapes).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Code without a glyph, or a glyph without a code.
class EncodingError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed text input. line and column are 1-based; column 0 means the
/// whole line.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column = 0)
      : Error(format(what, line, column)), line_(line), column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  static std::string format(const std::string& what, std::size_t line, std::size_t column) {
    std::string where = "line " + std::to_string(line);
    if (column != 0) where += ", column " + std::to_string(column);
    return where + ": " + what;
  }

  std::size_t line_;
  std::size_t column_;
};

class VersionError : public Error {
 public:
  using Error::Error;
};

/// A client message that breaks the session protocol.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

}  // namespace gridlab
