#pragma once

#include <stdexcept>
#include <string>

namespace kinv {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// The explicit integrator produced a frame with a significantly negative value.
class InstabilityError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// File could not be opened, read, or parsed.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace kinv
