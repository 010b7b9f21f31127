#include "ap/control/mpc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ap/common/error.hpp"
#include "ap/control/teacher.hpp"

namespace ap::control {

void MpcConfig::validate() const {
  if (control_horizon < 1 || control_horizon > prediction_horizon)
    throw ConfigError("mpc: need 1 <= control_horizon <= prediction_horizon");
  if (!(beta > 0.0)) throw ConfigError("mpc: beta must be > 0");
  if (!(u_max > basal && basal > 0.0)) throw ConfigError("mpc: need u_max > basal > 0");
  if (!(w_hypo >= w_hyper && w_hyper > 0.0)) throw ConfigError("mpc: need w_hypo >= w_hyper > 0");
}

double d_bg(double bg, const MpcConfig& cfg) noexcept {
  const double lo = std::max(0.0, cfg.target_bg - bg);
  const double hi = std::max(0.0, bg - cfg.target_bg);
  return cfg.w_hypo * lo * lo + cfg.w_hyper * hi * hi;
}

std::vector<double> expand_controls(std::span<const double> decision, const MpcConfig& cfg) {
  std::vector<double> u(cfg.prediction_horizon, cfg.basal);
  std::copy_n(decision.begin(), std::min(decision.size(), cfg.control_horizon), u.begin());
  return u;
}

double mpc_cost(const PredictionModel& model, std::span<const double> x0, std::span<const double> d_seq,
                std::span<const double> u_seq, const MpcConfig& cfg, double u_prev) {
  if (u_seq.size() < cfg.prediction_horizon || d_seq.size() < cfg.prediction_horizon)
    throw std::invalid_argument("mpc_cost: sequences shorter than the prediction horizon");
  std::vector<double> x(x0.begin(), x0.end());
  double j = 0.0;
  for (std::size_t k = 0; k < cfg.prediction_horizon; ++k) {
    model.step(x, k, u_seq[k], d_seq[k]);
    j += d_bg(model.bg(x, k + 1), cfg);
  }
  double prev = u_prev;
  for (std::size_t k = 0; k < cfg.control_horizon; ++k) {
    const double du = u_seq[k] - prev;
    j += cfg.beta * du * du;
    prev = u_seq[k];
  }
  return j;
}

MpcProblem::MpcProblem(const PredictionModel& model, std::span<const double> x0, std::span<const double> d_seq,
                       const MpcConfig& cfg, double u_prev, const LearnerMatching* matching)
    : model_(model),
      x0_(x0.begin(), x0.end()),
      d_(d_seq.begin(), d_seq.end()),
      cfg_(cfg),
      u_prev_(u_prev),
      matching_(matching),
      sw_hypo_(std::sqrt(cfg.w_hypo)),
      sw_hyper_(std::sqrt(cfg.w_hyper)),
      sbeta_(std::sqrt(cfg.beta)) {
  if (d_.size() < cfg_.prediction_horizon) throw std::invalid_argument("MpcProblem: d_future shorter than N_p");
  d_.resize(cfg_.prediction_horizon);
}

double MpcProblem::bg_residual(double bg) const noexcept {
  const double e = bg - cfg_.target_bg;
  return e < 0.0 ? sw_hypo_ * e : sw_hyper_ * e;
}

void MpcProblem::rollout(std::span<const double> u_full, std::size_t from, std::span<double> x,
                         std::span<double> r_bg) const {
  for (std::size_t k = from; k < cfg_.prediction_horizon; ++k) {
    model_.step(x, k, u_full[k], d_[k]);
    r_bg[k] = bg_residual(model_.bg(x, k + 1));
  }
}

void MpcProblem::residuals(std::span<const double> z, std::span<double> r) const {
  const std::vector<double> u = expand_controls(z, cfg_);
  std::vector<double> x = x0_;
  rollout(u, 0, x, r.first(cfg_.prediction_horizon));
  double prev = u_prev_;
  for (std::size_t k = 0; k < cfg_.control_horizon; ++k) {
    r[cfg_.prediction_horizon + k] = sbeta_ * (z[k] - prev);
    prev = z[k];
  }
}

void MpcProblem::jacobian(std::span<const double> z, std::span<const double> /*r*/, Eigen::MatrixXd& jac) const {
  const std::size_t np = cfg_.prediction_horizon, nc = cfg_.control_horizon;
  const std::size_t nx = model_.state_dim();
  jac.setZero(static_cast<Eigen::Index>(np + nc), static_cast<Eigen::Index>(nc));

  std::vector<double> u = expand_controls(z, cfg_);
  // Nominal states at every step; perturbing u_j only changes steps >= j.
  std::vector<double> states((np + 1) * nx);
  std::copy(x0_.begin(), x0_.end(), states.begin());
  {
    std::vector<double> x = x0_;
    for (std::size_t k = 0; k < np; ++k) {
      model_.step(x, k, u[k], d_[k]);
      std::copy(x.begin(), x.end(), states.begin() + static_cast<std::ptrdiff_t>((k + 1) * nx));
    }
  }
  std::vector<double> rp(np), rm(np), x(nx);
  for (std::size_t j = 0; j < nc; ++j) {
    const double h = fd_step(j, z[j]);
    const double up = std::min(cfg_.u_max, z[j] + h);
    const double dn = std::max(0.0, z[j] - h);
    const double base = u[j];

    auto run = [&](double uj, std::vector<double>& out) {
      u[j] = uj;
      std::copy_n(states.begin() + static_cast<std::ptrdiff_t>(j * nx), nx, x.begin());
      rollout(u, j, x, out);
    };
    run(up, rp);
    run(dn, rm);
    u[j] = base;
    const double span = up - dn;
    for (std::size_t k = j; k < np; ++k)
      jac(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = (rp[k] - rm[k]) / span;
  }
  for (std::size_t k = 0; k < nc; ++k) {
    jac(static_cast<Eigen::Index>(np + k), static_cast<Eigen::Index>(k)) = sbeta_;
    if (k > 0) jac(static_cast<Eigen::Index>(np + k), static_cast<Eigen::Index>(k - 1)) = -sbeta_;
  }
}

double MpcProblem::penalty(double z0) const {
  if (!has_penalty()) return 0.0;
  return matching_->rho * wasserstein_penalty(z0, matching_->samples, matching_->order);
}

double MpcProblem::penalty_prox(double a, double c, double lo, double hi) const {
  if (has_penalty() && matching_->order == 1.0)
    return std::clamp(prox_mean_abs(a, c, matching_->samples, matching_->rho), lo, hi);
  return BoxLeastSquares::penalty_prox(a, c, lo, hi);
}

double MpcProblem::cost(std::span<const double> z) const {
  std::vector<double> r(residual_count());
  residuals(z, r);
  double s = 0.0;
  for (double v : r) s += v * v;
  return s;
}

std::vector<double> shift_warm_start(std::span<const double> previous, const MpcConfig& cfg) {
  std::vector<double> w(cfg.control_horizon, cfg.basal);
  if (previous.size() == cfg.control_horizon && cfg.control_horizon > 1) {
    std::copy(previous.begin() + 1, previous.end(), w.begin());
    w.back() = previous.back();
  }
  return w;
}

MpcSolution solve_supervision(const PredictionModel& model, std::span<const double> x, std::span<const double> d_future,
                              const MpcConfig& cfg, double u_prev, std::span<const double> warm, Rng& rng) {
  const MpcProblem problem(model, x, d_future, cfg, u_prev);
  std::vector<double> start = warm.size() == cfg.control_horizon ? std::vector<double>(warm.begin(), warm.end())
                                                                 : std::vector<double>(cfg.control_horizon, cfg.basal);
  SolveResult res = solve_multistart(problem, std::move(start), cfg.solver, rng);
  MpcSolution sol;
  sol.u = std::clamp(res.z.front(), 0.0, cfg.u_max);
  sol.sequence = res.z;
  sol.cost = res.objective;
  sol.converged = res.converged;
  sol.detail = std::move(res);
  return sol;
}

}  // namespace ap::control
