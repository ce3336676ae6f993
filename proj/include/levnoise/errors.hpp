#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace levnoise {

// Base for every error the library reports. The CLI maps each subclass to a
// stable exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad command-line usage or an argument outside its admissible range.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Malformed or invalid configuration / input document.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A formula evaluated outside its domain (non-positive frequency, etc.).
class DomainError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Numerical blow-up inside the integrator.
class SimulationFault : public Error {
 public:
  SimulationFault(const std::string& what, std::uint64_t step)
      : Error(what + " at step " + std::to_string(step)), step_index_(step) {}

  std::uint64_t step_index() const noexcept { return step_index_; }

 private:
  std::uint64_t step_index_;
};

}  // namespace levnoise
