#include "ap/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ap::eval {

std::array<double, kMetricCount> as_array(const MetricSet& m) noexcept {
  return {m.t_hypo, m.t_eu, m.t_hyper, m.bg_max, m.bg_min, m.u_mean};
}

MetricSet compute_metrics(const RolloutRecord& r) {
  if (r.bg.empty()) throw std::invalid_argument("compute_metrics: empty record");
  std::size_t hypo = 0, hyper = 0;
  for (double bg : r.bg) {
    if (bg <= 70.0)
      ++hypo;
    else if (bg >= 180.0)
      ++hyper;
  }
  const std::size_t n = r.bg.size();
  const double scale = 100.0 / static_cast<double>(n);
  MetricSet m;
  m.t_hypo = static_cast<double>(hypo) * scale;
  m.t_hyper = static_cast<double>(hyper) * scale;
  m.t_eu = static_cast<double>(n - hypo - hyper) * scale;
  const auto [lo, hi] = std::minmax_element(r.bg.begin(), r.bg.end());
  m.bg_min = *lo;
  m.bg_max = *hi;
  m.u_mean = r.u.empty() ? 0.0 : std::accumulate(r.u.begin(), r.u.end(), 0.0) / static_cast<double>(r.u.size());
  return m;
}

CovSeries cov_series(const std::vector<RolloutRecord>& records) {
  CovSeries out;
  for (const auto& r : records) {
    if (r.samples.empty()) throw std::invalid_argument("cov_series: record " + r.policy + " carries no samples");
    for (const auto& s : r.samples) {
      if (s.empty()) continue;
      const double n = static_cast<double>(s.size());
      const double mean = std::accumulate(s.begin(), s.end(), 0.0) / n;
      if (mean == 0.0) {
        ++out.skipped;
        continue;
      }
      double ss = 0.0;
      for (double v : s) ss += (v - mean) * (v - mean);
      out.values.push_back(std::sqrt(ss / n) / mean);
    }
  }
  return out;
}

}  // namespace ap::eval
