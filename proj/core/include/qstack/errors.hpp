#pragma once

#include <stdexcept>
#include <string>

namespace qstack {

/// Base class for all qstack failures. The CLI maps these to exit code 1.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Filesystem / serialization failures. The CLI maps these to exit code 2.
class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(what) {}
};

/// Caller broke a documented precondition (dimension mismatch, bad config).
class ContractViolation : public Error {
 public:
  explicit ContractViolation(const std::string& what) : Error(what) {}
};

/// A state left the finite/admissible region during integration.
class IntegrationDiverged : public Error {
 public:
  IntegrationDiverged(const std::string& what, long substep)
      : Error(what + " (substep " + std::to_string(substep) + ")"),
        substep_(substep) {}
  long substep() const { return substep_; }

 private:
  long substep_;
};

/// The one-step prediction model produced a non-finite state.
class PredictionDiverged : public Error {
 public:
  explicit PredictionDiverged(const std::string& what) : Error(what) {}
};

class OptimizerFailed : public Error {
 public:
  explicit OptimizerFailed(const std::string& what) : Error(what) {}
};

class UpdateFailed : public Error {
 public:
  explicit UpdateFailed(const std::string& what) : Error(what) {}
};

class OracleFailed : public Error {
 public:
  explicit OracleFailed(const std::string& what) : Error(what) {}
};

class EnumerationTooLarge : public Error {
 public:
  explicit EnumerationTooLarge(const std::string& what) : Error(what) {}
};

}  // namespace qstack
