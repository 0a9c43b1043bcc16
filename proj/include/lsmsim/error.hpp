#pragma once

#include <stdexcept>
#include <string>

namespace lsmsim {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent experiment configuration (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or unreadable input data (CLI exit code 3).
class DataError : public Error {
 public:
  using Error::Error;
};

/// A dataset needed by a gated command is not present (CLI exit code 4).
class DatasetMissing : public Error {
 public:
  using Error::Error;
};

}  // namespace lsmsim
