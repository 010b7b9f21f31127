#include "ap/control/prediction.hpp"

#include <algorithm>
#include <stdexcept>

namespace ap::control {

using patient::PatientState;

PatientPredictor::PatientPredictor(const patient::PatientParameters& params, double t0_min, double step_minutes,
                                   double max_substep)
    : params_(params),
      t0_(t0_min),
      step_minutes_(step_minutes),
      max_substep_(max_substep),
      constant_(params.time_constant()) {
  cache_.push_back(params_.at(t0_));
}

const patient::ParamVector& PatientPredictor::lambda(std::size_t k) const {
  if (constant_) return cache_.front();
  while (cache_.size() <= k)
    cache_.push_back(params_.at(t0_ + static_cast<double>(cache_.size()) * step_minutes_));
  return cache_[k];
}

void PatientPredictor::step(std::span<double> x, std::size_t k, double u, double d) const {
  PatientState s;
  std::copy(x.begin(), x.end(), s.x.begin());
  s = patient::integrate_step(s, lambda(k), u, d / step_minutes_, step_minutes_, max_substep_);
  std::copy(s.x.begin(), s.x.end(), x.begin());
}

double PatientPredictor::bg(std::span<const double> x, std::size_t k) const {
  PatientState s;
  std::copy(x.begin(), x.end(), s.x.begin());
  return patient::bg_of_state(s, lambda(k));
}

std::vector<std::vector<double>> predict_trajectory(const PredictionModel& model, std::span<const double> x0,
                                                    std::span<const double> u_seq, std::span<const double> d_seq) {
  if (u_seq.size() != d_seq.size()) throw std::invalid_argument("predict_trajectory: |u| != |d|");
  std::vector<std::vector<double>> out;
  out.reserve(u_seq.size() + 1);
  out.emplace_back(x0.begin(), x0.end());
  std::vector<double> x(x0.begin(), x0.end());
  for (std::size_t k = 0; k < u_seq.size(); ++k) {
    model.step(x, k, u_seq[k], d_seq[k]);
    out.push_back(x);
  }
  return out;
}

std::vector<PatientState> predict_trajectory(const PredictionModel& model, const PatientState& x0,
                                             std::span<const double> u_seq, std::span<const double> d_seq) {
  const auto raw = predict_trajectory(model, std::span<const double>(x0.x), u_seq, d_seq);
  std::vector<PatientState> out(raw.size());
  for (std::size_t k = 0; k < raw.size(); ++k) std::copy(raw[k].begin(), raw[k].end(), out[k].x.begin());
  return out;
}

}  // namespace ap::control
