#include "ap/control/mhe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ap/common/error.hpp"

namespace ap::control {

using patient::kStateDim;
using patient::PatientState;

void MheConfig::validate() const {
  if (lookback < 1) throw ConfigError("mhe: lookback must be >= 1");
  if (!(output_weight >= 0.0) || !(prior_weight >= 0.0)) throw ConfigError("mhe: weights must be >= 0");
}

namespace {

class MheProblem final : public BoxLeastSquares {
 public:
  MheProblem(const PredictionModel& model, std::span<const double> y, std::span<const double> u,
             std::span<const double> d, const PatientState& prior, const MheConfig& cfg)
      : model_(model),
        y_(y.begin(), y.end()),
        u_(u.begin(), u.begin() + static_cast<std::ptrdiff_t>(y.size() - 1)),
        d_(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(y.size() - 1)),
        prior_(prior),
        sy_(std::sqrt(cfg.output_weight)),
        sp_(std::sqrt(cfg.prior_weight)) {}

  std::size_t dim() const override { return kStateDim; }
  std::size_t residual_count() const override { return y_.size() + kStateDim; }
  double lower(std::size_t) const override { return 0.0; }
  double upper(std::size_t) const override { return std::numeric_limits<double>::infinity(); }

  void residuals(std::span<const double> z, std::span<double> r) const override {
    std::vector<double> x(z.begin(), z.end());
    r[0] = sy_ * (y_[0] - model_.bg(x, 0));
    for (std::size_t k = 0; k < u_.size(); ++k) {
      model_.step(x, k, u_[k], d_[k]);
      r[k + 1] = sy_ * (y_[k + 1] - model_.bg(x, k + 1));
    }
    for (std::size_t i = 0; i < kStateDim; ++i) r[y_.size() + i] = sp_ * (z[i] - prior_.x[i]);
  }

 private:
  const PredictionModel& model_;
  std::vector<double> y_, u_, d_;
  PatientState prior_;
  double sy_, sp_;
};

}  // namespace

MheResult mhe_estimate(const PredictionModel& model, std::span<const double> y_hist, std::span<const double> u_hist,
                       std::span<const double> d_hist, const PatientState& prior, const MheConfig& cfg) {
  if (y_hist.empty()) throw std::invalid_argument("mhe_estimate: empty measurement window");
  if (u_hist.size() + 1 < y_hist.size() || d_hist.size() + 1 < y_hist.size())
    throw std::invalid_argument("mhe_estimate: input history shorter than the measurement window");

  const MheProblem problem(model, y_hist, u_hist, d_hist, prior, cfg);
  std::vector<double> start(prior.x.begin(), prior.x.end());
  SolveResult res = solve_local(problem, std::move(start), cfg.solver);

  MheResult out;
  std::copy(res.z.begin(), res.z.end(), out.window_start.x.begin());
  std::vector<double> x = res.z;
  for (std::size_t k = 0; k + 1 < y_hist.size(); ++k) model.step(x, k, u_hist[k], d_hist[k]);
  std::copy(x.begin(), x.end(), out.estimate.x.begin());
  out.objective = res.objective;
  out.converged = res.converged;
  return out;
}

MovingHorizonEstimator::MovingHorizonEstimator(patient::PatientParameters model_params,
                                               patient::PatientState initial_guess, MheConfig cfg,
                                               double step_minutes)
    : params_(std::move(model_params)), cfg_(cfg), step_minutes_(step_minutes), window_start_(initial_guess) {
  cfg_.validate();
}

void MovingHorizonEstimator::record_inputs(double u, double d) {
  u_.push_back(u);
  d_.push_back(d);
}

PatientState MovingHorizonEstimator::update(double t_min, double y_now) {
  if (y_.empty()) window_start_time_ = t_min;
  y_.push_back(y_now);
  while (y_.size() > cfg_.lookback + 1) {
    // Slide: the arrival prior is the previous window-start estimate advanced one step.
    const PatientPredictor step_model(params_, window_start_time_, step_minutes_);
    std::vector<double> x(window_start_.x.begin(), window_start_.x.end());
    step_model.step(x, 0, u_.front(), d_.front());
    std::copy(x.begin(), x.end(), window_start_.x.begin());
    window_start_time_ += step_minutes_;
    y_.pop_front();
    u_.pop_front();
    d_.pop_front();
  }
  const std::vector<double> y(y_.begin(), y_.end());
  const std::vector<double> u(u_.begin(), u_.end());
  const std::vector<double> d(d_.begin(), d_.end());
  const PatientPredictor model(params_, window_start_time_, step_minutes_);
  const MheResult res = mhe_estimate(model, y, u, d, window_start_, cfg_);
  window_start_ = res.window_start;
  last_converged_ = res.converged;
  return res.estimate;
}

}  // namespace ap::control
