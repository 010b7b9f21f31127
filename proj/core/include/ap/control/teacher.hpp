#pragma once

#include <cstddef>
#include <span>

#include "ap/common/rng.hpp"
#include "ap/control/mpc.hpp"

namespace ap::control {

struct TeacherConfig {
  double rho = 0.0;       // matching weight in [0, 1)
  std::size_t samples = 47;
  double order = 1.0;     // Wasserstein order p
  double match_scale = 1.0;  // cost units per unit of J_M; the penalty is rho * match_scale * J_M

  void validate() const;
};

/// W_p between a point mass at u_t and the empirical distribution of `samples`:
/// (1/n sum |s_i - u_t|^p)^(1/p). Throws std::invalid_argument on empty samples.
double wasserstein_penalty(double u_t, std::span<const double> samples, double p = 1.0);

/// argmin_v  a/2 (v - c)^2 + weight * mean_i |v - s_i|  for sorted s (a > 0).
double prox_mean_abs(double a, double c, std::span<const double> sorted_samples, double weight);

/// Adaptive teacher: minimizes J + rho * match_scale * J_M where J_M compares the first action
/// with the (fixed) learner samples. With rho = 0 this is the supervision policy.
MpcSolution solve_adaptive_teacher(const PredictionModel& model, std::span<const double> x,
                                   std::span<const double> d_future, const MpcConfig& cfg, double u_prev,
                                   std::span<const double> learner_samples, const TeacherConfig& tcfg,
                                   std::span<const double> warm, Rng& rng);

}  // namespace ap::control
