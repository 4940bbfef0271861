#pragma once

#include <stdexcept>
#include <string>

namespace ctxgov {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// The final query alone does not fit in the configured budget.
class BudgetError : public Error {
 public:
  using Error::Error;
};

class GenerationError : public Error {
 public:
  using Error::Error;
};

// A metric was requested over an empty input.
class MetricError : public Error {
 public:
  using Error::Error;
};

class PairingError : public Error {
 public:
  using Error::Error;
};

class IntegrityError : public Error {
 public:
  using Error::Error;
};

// Analysis requested while targeted campaign cells are missing or incomplete.
class IncompleteMatrixError : public Error {
 public:
  using Error::Error;
};

// Internal contract broken by a caller (e.g. composing an over-budget state).
class InvariantError : public Error {
 public:
  using Error::Error;
};

class TransportError : public Error {
 public:
  TransportError(const std::string& what, int attempts)
      : Error(what), attempts_(attempts) {}
  int attempts() const noexcept { return attempts_; }

 private:
  int attempts_;
};

class ProtocolError : public Error {
 public:
  using Error::Error;
};

class AuthError : public Error {
 public:
  using Error::Error;
};

}  // namespace ctxgov
