#pragma once

#include <stdexcept>
#include <string>

namespace ioncool {

// Base for every error raised by the library. The CLI maps subclasses onto
// exit codes (ConfigError -> 2, ScheduleError/FitError -> 3).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A documented precondition of an operation was violated by the caller.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// A truncated Fock space or photon-count axis would discard more probability
// than the configured tolerance allows.
class TruncationError : public Error {
 public:
  using Error::Error;
};

class ScheduleError : public Error {
 public:
  using Error::Error;
};

class FitError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace ioncool
