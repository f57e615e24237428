#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace gisc {

// Base of every error thrown by the library. The exit code is what the
// command line tool returns when the error reaches main().
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what, int exit_code = 1)
      : std::runtime_error(what), exit_code_(exit_code) {}
  int exit_code() const noexcept { return exit_code_; }

 private:
  int exit_code_;
};

class InvalidParameter : public Error {
 public:
  explicit InvalidParameter(const std::string& what) : Error("invalid parameter: " + what, 2) {}
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error("shape error: " + what, 2) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("config error: " + what, 2) {}
};

// Operator too large to materialize densely.
class CapacityError : public Error {
 public:
  explicit CapacityError(const std::string& what) : Error("capacity error: " + what, 2) {}
};

// Measurement, calibration or reconstruction files that do not belong together.
class PairingError : public Error {
 public:
  explicit PairingError(const std::string& what) : Error("pairing error: " + what, 3) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error("numeric failure: " + what, 4) {}
};

// Source offset beyond the range where translated calibration patterns are valid.
class OutOfMemoryEffect : public Error {
 public:
  explicit OutOfMemoryEffect(const std::string& what)
      : Error("outside memory-effect range: " + what, 2) {}
};

class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t byte_offset);
  std::uint64_t byte_offset() const noexcept { return byte_offset_; }

 private:
  std::uint64_t byte_offset_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error("io error: " + what, 1) {}
};

}  // namespace gisc
