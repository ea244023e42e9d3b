#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace wqed {

/// Precondition violated by a caller (bad site index, infeasible excitation count, ...).
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

/// Requested Hilbert space or operator does not fit the configured memory budget.
struct CapacityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Integrator or eigensolver failure, or a conservation check that broke.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Schema violations in an experiment config. Each issue is "<json-pointer>: <message>".
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> issues)
      : std::runtime_error(join(issues)), issues_(std::move(issues)) {}

  const std::vector<std::string>& issues() const noexcept { return issues_; }

 private:
  static std::string join(const std::vector<std::string>& issues) {
    std::string out = "invalid config";
    for (const auto& s : issues) out += "\n  " + s;
    return out;
  }

  std::vector<std::string> issues_;
};

}  // namespace wqed
