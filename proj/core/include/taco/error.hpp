#pragma once

#include <stdexcept>
#include <string>

namespace taco {

// Process exit codes used by the command-line tool.
enum class ExitCode : int {
  kOk = 0,
  kConfig = 2,
  kData = 3,
  kNumeric = 4,
};

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual ExitCode exit_code() const noexcept { return ExitCode::kData; }
};

// Invalid configuration, out-of-range parameters, unknown keys.
class ConfigError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kConfig; }
};

// Malformed or inconsistent on-disk data.
class DataError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf in a tensor, zero-norm vectors where a direction is required.
class NumericError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kNumeric; }
};

class ShapeError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kNumeric; }
};

// A caller violated a documented precondition.
class ContractError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kData; }
};

// Optimizer or model used in an invalid state (e.g. missing gradient).
class StateError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kNumeric; }
};

// Checkpoint produced under a different model configuration.
class VersionError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kConfig; }
};

// Raised by task constructors when a sample cannot produce a meaningful
// instance (e.g. empty mask for a semantic task). Samplers catch it and draw
// another sample.
class SkipInstance : public Error {
 public:
  using Error::Error;
};

// Sampling could not complete within its retry budget.
class SamplingError : public Error {
 public:
  using Error::Error;
};

}  // namespace taco
