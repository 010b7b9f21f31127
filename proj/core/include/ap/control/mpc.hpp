#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ap/common/rng.hpp"
#include "ap/control/prediction.hpp"
#include "ap/control/solver.hpp"

namespace ap::control {

struct MpcConfig {
  std::size_t prediction_horizon = 30;  // N_p, steps
  std::size_t control_horizon = 20;     // N_c, steps
  double beta = 1e-3;                   // insulin-smoothness weight
  double u_max = 100.0;                 // mU/min; admissible set is [0, u_max]
  double basal = 0.0;                   // mU/min, applied beyond the control horizon
  double target_bg = 110.0;             // mg/dL
  double w_hypo = 4.0;
  double w_hyper = 1.0;
  SolverOptions solver{};

  void validate() const;
};

/// Asymmetric quadratic glucose penalty.
double d_bg(double bg, const MpcConfig& cfg) noexcept;

/// Cost of a full N_p insulin sequence:
///   sum_{k=1..N_p} d_bg(bg_k) + beta * sum_{k=0..N_c-1} (u_k - u_{k-1})^2,  u_{-1} = u_prev.
double mpc_cost(const PredictionModel& model, std::span<const double> x0, std::span<const double> d_seq,
                std::span<const double> u_seq, const MpcConfig& cfg, double u_prev);

/// Expands N_c decision variables to an N_p sequence with the basal tail.
std::vector<double> expand_controls(std::span<const double> decision, const MpcConfig& cfg);

/// Penalty rho * W_p(delta_{u_0}, empirical learner samples) on the first action.
struct LearnerMatching {
  double rho = 0.0;
  double order = 1.0;
  std::vector<double> samples;  // sorted
};

/// The receding-horizon problem over u_0..u_{N_c-1} in [0, u_max]^{N_c}.
class MpcProblem final : public BoxLeastSquares {
 public:
  MpcProblem(const PredictionModel& model, std::span<const double> x0, std::span<const double> d_seq,
             const MpcConfig& cfg, double u_prev, const LearnerMatching* matching = nullptr);

  std::size_t dim() const override { return cfg_.control_horizon; }
  std::size_t residual_count() const override { return cfg_.prediction_horizon + cfg_.control_horizon; }
  double lower(std::size_t) const override { return 0.0; }
  double upper(std::size_t) const override { return cfg_.u_max; }
  void residuals(std::span<const double> z, std::span<double> r) const override;
  void jacobian(std::span<const double> z, std::span<const double> r, Eigen::MatrixXd& jac) const override;
  double fd_step(std::size_t, double) const override { return 1e-3; }

  bool has_penalty() const override { return matching_ != nullptr && matching_->rho > 0.0; }
  double penalty(double z0) const override;
  double penalty_prox(double a, double c, double lo, double hi) const override;

  /// MPC cost J (without the matching penalty) at a decision vector.
  double cost(std::span<const double> z) const;

 private:
  double bg_residual(double bg) const noexcept;
  void rollout(std::span<const double> u_full, std::size_t from, std::span<double> x, std::span<double> r_bg) const;

  const PredictionModel& model_;
  std::vector<double> x0_;
  std::vector<double> d_;
  MpcConfig cfg_;
  double u_prev_;
  const LearnerMatching* matching_;
  double sw_hypo_, sw_hyper_, sbeta_;
};

struct MpcSolution {
  double u = 0.0;                 // first action
  std::vector<double> sequence;   // N_c decision values
  double cost = 0.0;              // J at the solution
  double penalty = 0.0;           // rho * J_M at the solution
  bool converged = true;          // false: best feasible iterate returned
  SolveResult detail;
};

/// Supervision policy: full-state MPC. `d_future` must hold at least N_p entries.
/// `warm` (N_c values, may be empty) seeds the local solve before random restarts.
MpcSolution solve_supervision(const PredictionModel& model, std::span<const double> x, std::span<const double> d_future,
                              const MpcConfig& cfg, double u_prev, std::span<const double> warm, Rng& rng);

/// Shifted previous solution used as the next warm start.
std::vector<double> shift_warm_start(std::span<const double> previous, const MpcConfig& cfg);

}  // namespace ap::control
