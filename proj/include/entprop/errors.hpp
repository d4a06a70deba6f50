#pragma once

#include <stdexcept>
#include <string>

namespace entprop {

/// Malformed or out-of-schema configuration. Maps to CLI exit code 1.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A numerical contract was breached (eigensolver residual, non-unit trace,
/// non-convergence). Maps to CLI exit code 2. Never swallowed.
class NumericalContractError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

} // namespace entprop
