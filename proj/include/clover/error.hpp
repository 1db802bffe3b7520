// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace clover {

/// Base for every error raised by the toolkit. The CLI maps these to exit 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file or text. `line` is 1-based, 0 when not line-oriented.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Caller violated an operation precondition (bad size, bad k, empty bank, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Dataset invariants broken (id collision, organ conflict, ...).
class IntegrityError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Non-recoverable completion backend failure. `status` is the last HTTP
/// status seen, or 0 for transport-level failures.
class BackendError : public Error {
 public:
  BackendError(const std::string& what, int status, bool transient)
      : Error(what), status_(status), transient_(transient) {}
  int status() const noexcept { return status_; }
  bool transient() const noexcept { return transient_; }

 private:
  int status_;
  bool transient_;
};

/// Raised before a request is sent when its projected cost would overrun the budget.
class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

}  // namespace clover
