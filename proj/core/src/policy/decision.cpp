#include "ap/policy/decision.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "ap/common/error.hpp"

namespace ap::policy {

std::string_view to_string(DecisionVariant v) noexcept {
  switch (v) {
    case DecisionVariant::kDlp: return "dlp";
    case DecisionVariant::kSlpM: return "slp-m";
    case DecisionVariant::kSlpA: return "slp-a";
  }
  return "?";
}

void DecisionRule::validate() const {
  if (samples < 1) throw ConfigError("decision rule: sample count must be >= 1");
  if (!(bg_lb < bg_ub)) throw ConfigError("decision rule: bg_lb must be below bg_ub");
  if (!(u_max > 0.0)) throw ConfigError("decision rule: u_max must be > 0");
}

std::size_t adaptive_order(std::size_t n, double y_prev, double bg_lb, double bg_ub) {
  if (n < 1) throw std::invalid_argument("adaptive_order: n must be >= 1");
  const double ratio = (y_prev - bg_lb) / (bg_ub - bg_lb);
  const double m = std::ceil(static_cast<double>(n) * ratio);
  if (!(m >= 1.0)) return 1;
  if (m >= static_cast<double>(n)) return n;
  return static_cast<std::size_t>(m);
}

double decide(const DecisionRule& rule, std::span<const double> values, double y_prev) {
  if (values.empty()) throw std::invalid_argument("decide: empty sample vector");
  double u = 0.0;
  switch (rule.variant) {
    case DecisionVariant::kDlp:
      u = values.front();
      break;
    case DecisionVariant::kSlpM:
      u = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
      break;
    case DecisionVariant::kSlpA:
      u = values[adaptive_order(values.size(), y_prev, rule.bg_lb, rule.bg_ub) - 1];
      break;
  }
  return std::clamp(u, 0.0, rule.u_max);
}

}  // namespace ap::policy
