#pragma once

#include <cstddef>
#include <deque>
#include <span>
#include <vector>

#include "ap/control/prediction.hpp"
#include "ap/control/solver.hpp"
#include "ap/patient/model.hpp"

namespace ap::control {

struct MheConfig {
  std::size_t lookback = 6;     // N_b, steps
  double output_weight = 1.0;
  double prior_weight = 1e-2;
  SolverOptions solver{.max_iterations = 50, .grad_tol = 1e-6, .restarts = 0};

  void validate() const;
};

struct MheResult {
  patient::PatientState estimate;      // state at the current time t
  patient::PatientState window_start;  // optimized state at t - N_b
  double objective = 0.0;
  bool converged = true;
};

/// Single-shooting moving-horizon estimate. `model` steps are indexed from the window
/// start. y and u hold N_b + 1 entries (t - N_b .. t), d holds N_b entries; only the
/// first N_b inputs influence the window. Minimizes
///   sum_k w_y (y_k - h(x_k))^2 + w_p |x_{t-N_b} - prior|^2  over x_{t-N_b} >= 0.
MheResult mhe_estimate(const PredictionModel& model, std::span<const double> y_hist, std::span<const double> u_hist,
                       std::span<const double> d_hist, const patient::PatientState& prior, const MheConfig& cfg);

/// Running estimator for closed-loop use: keeps the measurement window and an arrival
/// prior (previous window-start estimate advanced one step).
class MovingHorizonEstimator {
 public:
  MovingHorizonEstimator(patient::PatientParameters model_params, patient::PatientState initial_guess, MheConfig cfg,
                         double step_minutes = 5.0);

  /// Registers the measurement at the current step and returns the state estimate.
  /// `t_min` is the absolute time of the current step.
  patient::PatientState update(double t_min, double y);

  /// Records the insulin and carbohydrate applied over the step that just started.
  void record_inputs(double u, double d);

  bool last_converged() const noexcept { return last_converged_; }

 private:
  patient::PatientParameters params_;
  MheConfig cfg_;
  double step_minutes_;
  std::deque<double> y_, u_, d_;
  patient::PatientState window_start_;
  double window_start_time_ = 0.0;
  bool last_converged_ = true;
};

}  // namespace ap::control
