#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ap/common/rng.hpp"

namespace ap::control {

/// Box-constrained nonlinear least squares, optionally with a convex penalty
/// that depends only on the first decision variable:
///
///   min_z  sum_i r_i(z)^2 + penalty(z_0)   s.t.  lower <= z <= upper
class BoxLeastSquares {
 public:
  virtual ~BoxLeastSquares() = default;

  virtual std::size_t dim() const = 0;
  virtual std::size_t residual_count() const = 0;
  virtual double lower(std::size_t i) const = 0;
  virtual double upper(std::size_t i) const = 0;

  virtual void residuals(std::span<const double> z, std::span<double> r) const = 0;

  /// Jacobian of the residuals at z; `r` holds residuals(z). Default is
  /// central differences (one-sided at active bounds).
  virtual void jacobian(std::span<const double> z, std::span<const double> r, Eigen::MatrixXd& jac) const;

  virtual bool has_penalty() const { return false; }
  virtual double penalty(double /*z0*/) const { return 0.0; }

  /// argmin_v  a/2 (v - c)^2 + penalty(v) on [lo, hi], a > 0. Default is golden section.
  virtual double penalty_prox(double a, double c, double lo, double hi) const;

  /// Finite-difference step for coordinate i at value v.
  virtual double fd_step(std::size_t i, double v) const;

  double objective(std::span<const double> z) const;
};

struct SolverOptions {
  int max_iterations = 200;
  double grad_tol = 1e-4;
  double step_tol = 1e-7;
  double rel_tol = 1e-12;
  int restarts = 3;           // random restarts in addition to the warm start
  int restart_iterations = 40;
  bool keep_log = false;
};

struct IterationLog {
  int iteration = 0;
  double objective = 0.0;
  double penalty = 0.0;
  double grad_norm = 0.0;
};

struct SolveResult {
  std::vector<double> z;
  double objective = 0.0;
  double penalty = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<IterationLog> log;
};

/// Projected Levenberg-Marquardt (Gauss-Newton with adaptive damping). Each
/// subproblem is a box-constrained QP solved by coordinate descent, with the
/// first coordinate handled through penalty_prox.
SolveResult solve_local(const BoxLeastSquares& problem, std::vector<double> z0, const SolverOptions& opt);

/// Warm start plus `opt.restarts` uniform random starts; returns the best.
SolveResult solve_multistart(const BoxLeastSquares& problem, std::vector<double> warm, const SolverOptions& opt,
                             Rng& rng);

/// Norm of the projected gradient step  P(z - g) - z  of the smooth part,
/// with the penalty subgradient at z_0 taken at its minimum-norm element.
double projected_gradient_norm(const BoxLeastSquares& problem, std::span<const double> z,
                               std::span<const double> grad);

/// CSV `step,J,Jm,grad_norm`.
void write_solver_log_csv(std::ostream& os, const std::vector<IterationLog>& log);

}  // namespace ap::control
