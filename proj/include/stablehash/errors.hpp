#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace stablehash {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration (bad architecture, mismatched code lengths, ...).
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Malformed runtime input (wrong shape, out-of-range label, bad length).
class InputError : public Error {
public:
  using Error::Error;
};

/// File and serialization failures.
class IoError : public Error {
public:
  using Error::Error;
};

/// Training diverged (non-finite loss). Carries the offending epoch.
class TrainingError : public Error {
public:
  TrainingError(const std::string& what, int epoch)
      : Error(what), epoch_(epoch) {}
  int epoch() const { return epoch_; }

private:
  int epoch_;
};

/// Enrollment failed; lists the users whose codes were not stable enough
/// (or that collided).
class EnrollmentError : public Error {
public:
  EnrollmentError(const std::string& what, std::vector<std::string> users)
      : Error(what), users_(std::move(users)) {}
  const std::vector<std::string>& users() const { return users_; }

private:
  std::vector<std::string> users_;
};

/// A fresh sample did not reproduce the enrolled stable code.
class RevocationError : public Error {
public:
  using Error::Error;
};

/// Too few observations to estimate a statistic.
class InsufficientDataError : public Error {
public:
  using Error::Error;
};

}  // namespace stablehash
