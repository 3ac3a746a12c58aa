#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace asymdelay {

/// Process exit codes used by the command-line tool.
enum class ExitCode : int { Ok = 0, Config = 1, Acquisition = 2, Gaps = 3 };

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual ExitCode exit_code() const noexcept { return ExitCode::Config; }
};

/// Invalid configuration, scenario field or attack parameter.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Scenario validation failure carrying every offending field path.
class ScenarioError : public ConfigError {
 public:
  explicit ScenarioError(std::vector<std::string> issues);
  const std::vector<std::string>& issues() const noexcept { return issues_; }

 private:
  std::vector<std::string> issues_;
};

/// An argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Caller broke a documented precondition (e.g. unsorted timestamps).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// No histogram bin rose above the background threshold.
class NoPeakError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::Acquisition; }
};

class AcquisitionError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::Acquisition; }
};

/// Every epoch of a clock-difference series failed estimation.
class EmptySeriesError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::Acquisition; }
};

/// Series contains gaps where a gap-free series is required.
class GapError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::Gaps; }
};

}  // namespace asymdelay
