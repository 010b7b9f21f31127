#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ap/patient/model.hpp"
#include "ap/patient/parameters.hpp"

namespace ap::control {

/// Discrete-time plant used inside the optimizers. Step k advances the state by
/// one control interval under insulin `u` (mU/min) and carbohydrate `d` (grams
/// for the interval).
class PredictionModel {
 public:
  virtual ~PredictionModel() = default;
  virtual std::size_t state_dim() const = 0;
  virtual void step(std::span<double> x, std::size_t k, double u, double d) const = 0;
  /// Plasma glucose (mg/dL) of a state reached after k steps.
  virtual double bg(std::span<const double> x, std::size_t k) const = 0;
};

/// The virtual-patient model with parameters evaluated at the start of every step.
class PatientPredictor final : public PredictionModel {
 public:
  PatientPredictor(const patient::PatientParameters& params, double t0_min, double step_minutes = 5.0,
                   double max_substep = patient::kDefaultMaxSubstep);

  std::size_t state_dim() const override { return patient::kStateDim; }
  void step(std::span<double> x, std::size_t k, double u, double d) const override;
  double bg(std::span<const double> x, std::size_t k) const override;

  const patient::ParamVector& lambda(std::size_t k) const;
  double step_minutes() const noexcept { return step_minutes_; }

 private:
  patient::PatientParameters params_;
  double t0_;
  double step_minutes_;
  double max_substep_;
  bool constant_;
  mutable std::vector<patient::ParamVector> cache_;
};

/// Trajectory x_0 = x0, x_{k+1} = F(x_k, u_k, d_k); returns u.size() + 1 states.
std::vector<std::vector<double>> predict_trajectory(const PredictionModel& model, std::span<const double> x0,
                                                    std::span<const double> u_seq, std::span<const double> d_seq);

std::vector<patient::PatientState> predict_trajectory(const PredictionModel& model, const patient::PatientState& x0,
                                                      std::span<const double> u_seq, std::span<const double> d_seq);

}  // namespace ap::control
