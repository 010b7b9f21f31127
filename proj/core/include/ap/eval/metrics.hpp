#pragma once

#include <array>
#include <cstddef>
#include <string_view>
#include <vector>

#include "ap/eval/rollout.hpp"

namespace ap::eval {

struct MetricSet {
  double t_hypo = 0.0;   // % of steps with BG <= 70
  double t_eu = 0.0;     // % of steps with 70 < BG < 180
  double t_hyper = 0.0;  // % of steps with BG >= 180
  double bg_max = 0.0;
  double bg_min = 0.0;
  double u_mean = 0.0;
};

inline constexpr std::size_t kMetricCount = 6;
inline constexpr std::array<std::string_view, kMetricCount> kMetricNames{"t_hypo", "t_eu",   "t_hyper",
                                                                        "bg_max", "bg_min", "u_mean"};

std::array<double, kMetricCount> as_array(const MetricSet& m) noexcept;

MetricSet compute_metrics(const RolloutRecord& r);

struct CovSeries {
  std::vector<double> values;  // one per step and record
  std::size_t skipped = 0;     // steps with zero sample mean
};

/// Population standard deviation over mean of the predictive samples of every step.
CovSeries cov_series(const std::vector<RolloutRecord>& records);

}  // namespace ap::eval
