#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cloudlens {

/// Base of every exception raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed text input (tuple files, plan files). Carries a 1-based line.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Snapshot documents that violate the schema or reference undeclared names.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// A caller broke an operation's precondition (e.g. applying an
/// inapplicable action).
class ContractError : public Error {
 public:
  using Error::Error;
};

}  // namespace cloudlens
