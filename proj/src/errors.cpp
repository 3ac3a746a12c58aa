#include "asymdelay/errors.hpp"

namespace asymdelay {

namespace {

std::string join_issues(const std::vector<std::string>& issues) {
  std::string out = "invalid scenario";
  for (const auto& issue : issues) {
    out += "\n  ";
    out += issue;
  }
  return out;
}

}  // namespace

ScenarioError::ScenarioError(std::vector<std::string> issues)
    : ConfigError(join_issues(issues)), issues_(std::move(issues)) {}

}  // namespace asymdelay
