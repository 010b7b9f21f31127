#pragma once

#include <cstddef>
#include <span>
#include <string_view>

namespace ap::policy {

enum class DecisionVariant { kDlp, kSlpM, kSlpA };

std::string_view to_string(DecisionVariant v) noexcept;

struct DecisionRule {
  DecisionVariant variant = DecisionVariant::kSlpA;
  std::size_t samples = 47;
  double bg_lb = 70.0;   // mg/dL
  double bg_ub = 180.0;
  double u_max = 100.0;

  void validate() const;
};

/// 1-based order statistic index of the adaptive rule:
/// clamp(ceil(n * (y_prev - bg_lb) / (bg_ub - bg_lb)), 1, n).
std::size_t adaptive_order(std::size_t n, double y_prev, double bg_lb, double bg_ub);

/// DLP: `values` holds the deterministic forward output. SLP-M: sample mean.
/// SLP-A: order statistic chosen from the previous CGM reading. Result is clamped
/// to [0, u_max]. Samples must be sorted for SLP-A.
double decide(const DecisionRule& rule, std::span<const double> values, double y_prev);

}  // namespace ap::policy
