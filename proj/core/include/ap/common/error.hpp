#pragma once

#include <stdexcept>
#include <string>

namespace ap {

/// Invalid user-supplied configuration (bad field, out-of-range value, missing file).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The patient ODE produced a non-finite compartment value.
class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, std::string compartment)
      : std::runtime_error(what), compartment_(std::move(compartment)) {}

  const std::string& compartment() const noexcept { return compartment_; }

 private:
  std::string compartment_;
};

/// No steady state exists inside the bisection bracket.
class EquilibriumError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Architecture / shape mismatch in the policy network.
class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Statistical test cannot be evaluated (all-zero differences, degenerate samples).
class StatisticsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Training produced a non-finite loss.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ap
