#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace sigman {

/// Base of every error the library throws. `kind()` is a stable short tag
/// used by the CLI when printing machine-parsable error lines.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

/// Incompatible tensor shapes for an op.
class ShapeError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "shape"; }
};

/// Invalid configuration or architecture.
class ConfigError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "config"; }
};

/// Malformed or inconsistent input data. Carries the byte offset for codec
/// failures (-1 when not applicable).
class DataError : public Error {
 public:
  explicit DataError(const std::string& what, std::int64_t offset = -1)
      : Error(offset >= 0 ? what + " (at byte " + std::to_string(offset) + ")" : what),
        offset_(offset) {}
  const char* kind() const noexcept override { return "data"; }
  std::int64_t offset() const noexcept { return offset_; }

 private:
  std::int64_t offset_;
};

/// Non-finite values, singular systems, diverged losses.
class NumericError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "numeric"; }
};

}  // namespace sigman
