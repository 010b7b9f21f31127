#include "ap/eval/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "ap/common/error.hpp"

namespace ap::eval {

namespace {

// log C(n, k) via lgamma.
double log_choose(std::size_t n, std::size_t k) {
  return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

// P(X >= k) for X ~ Binomial(n, 1/2).
double upper_tail(std::size_t n, std::size_t k) {
  const double log_half_n = -static_cast<double>(n) * std::numbers::ln2;
  double p = 0.0;
  for (std::size_t i = k; i <= n; ++i) p += std::exp(log_choose(n, i) + log_half_n);
  return std::min(1.0, p);
}

}  // namespace

double sign_test(std::span<const double> diffs, Direction direction) {
  if (diffs.empty()) throw StatisticsError("sign_test: no differences");
  std::size_t pos = 0, neg = 0;
  for (double d : diffs) {
    if (!std::isfinite(d)) throw StatisticsError("sign_test: non-finite difference");
    if (d > 0.0)
      ++pos;
    else if (d < 0.0)
      ++neg;
  }
  const std::size_t n = pos + neg;
  if (n == 0) throw StatisticsError("sign_test: all differences are zero");
  return upper_tail(n, direction == Direction::kGreater ? pos : neg);
}

double kolmogorov_survival(double lambda) {
  if (!(lambda > 0.0)) return 1.0;
  if (lambda < 1.18) {
    // Jacobi-theta form, fast for small lambda.
    const double pi2 = std::numbers::pi * std::numbers::pi;
    double cdf = 0.0;
    for (int k = 1; k <= 50; ++k) {
      const double m = 2.0 * k - 1.0;
      const double term = std::exp(-m * m * pi2 / (8.0 * lambda * lambda));
      cdf += term;
      if (term < 1e-18 * cdf) break;
    }
    cdf *= std::sqrt(2.0 * std::numbers::pi) / lambda;
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  double q = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    q += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-300) break;
  }
  return std::clamp(q, 0.0, 1.0);
}

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw StatisticsError("ks_two_sample: each sample needs at least 2 values");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  for (double v : x)
    if (!std::isfinite(v)) throw StatisticsError("ks_two_sample: non-finite value");
  for (double v : y)
    if (!std::isfinite(v)) throw StatisticsError("ks_two_sample: non-finite value");
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double nx = static_cast<double>(x.size()), ny = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
  }
  KsResult r;
  r.statistic = d;
  const double ne = nx * ny / (nx + ny);
  r.p_value = kolmogorov_survival(std::sqrt(ne) * d);
  return r;
}

std::array<MetricSummary, kMetricCount> summarize(const std::vector<MetricSet>& metrics) {
  std::array<MetricSummary, kMetricCount> out{};
  if (metrics.empty()) return out;
  const double n = static_cast<double>(metrics.size());
  for (const auto& m : metrics) {
    const auto v = as_array(m);
    for (std::size_t k = 0; k < kMetricCount; ++k) out[k].mean += v[k] / n;
  }
  if (metrics.size() < 2) return out;
  for (const auto& m : metrics) {
    const auto v = as_array(m);
    for (std::size_t k = 0; k < kMetricCount; ++k) out[k].std += (v[k] - out[k].mean) * (v[k] - out[k].mean);
  }
  for (auto& s : out) s.std = std::sqrt(s.std / (n - 1.0));
  return out;
}

ComparisonReport compare_policies(const std::vector<PolicyResults>& results, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("compare: alpha must lie in (0, 1)");
  ComparisonReport rep;
  rep.alpha = alpha;
  for (const auto& r : results) {
    if (r.seeds.size() != r.metrics.size()) throw ConfigError("compare: " + r.policy + " has unaligned seeds/metrics");
    if (r.seeds != results.front().seeds)
      throw ConfigError("compare: seed sets differ between " + results.front().policy + " and " + r.policy);
    rep.policies.push_back(r.policy);
    rep.summary.push_back(summarize(r.metrics));
  }
  for (std::size_t a = 0; a < results.size(); ++a) {
    for (std::size_t b = a + 1; b < results.size(); ++b) {
      for (std::size_t k = 0; k < kMetricCount; ++k) {
        std::vector<double> diffs;
        for (std::size_t s = 0; s < results[a].metrics.size(); ++s)
          diffs.push_back(as_array(results[a].metrics[s])[k] - as_array(results[b].metrics[s])[k]);
        PairwiseTest t;
        t.a = results[a].policy;
        t.b = results[b].policy;
        t.metric = k;
        try {
          t.p_greater = sign_test(diffs, Direction::kGreater);
          t.p_less = sign_test(diffs, Direction::kLess);
          t.significant = std::min(t.p_greater, t.p_less) < alpha;
        } catch (const StatisticsError&) {
          t.p_greater = t.p_less = std::numeric_limits<double>::quiet_NaN();
        }
        rep.tests.push_back(t);
      }
    }
  }
  return rep;
}

void write_report_csv(std::ostream& os, const ComparisonReport& rep) {
  os << "section,policy_a,policy_b,metric,mean_a,std_a,p_greater,p_less,significant\n";
  os << std::setprecision(10);
  for (std::size_t p = 0; p < rep.policies.size(); ++p)
    for (std::size_t k = 0; k < kMetricCount; ++k)
      os << "summary," << rep.policies[p] << ",," << kMetricNames[k] << ',' << rep.summary[p][k].mean << ','
         << rep.summary[p][k].std << ",,,\n";
  for (const auto& t : rep.tests)
    os << "sign_test," << t.a << ',' << t.b << ',' << kMetricNames[t.metric] << ",,," << t.p_greater << ','
       << t.p_less << ',' << (t.significant ? 1 : 0) << '\n';
}

void write_report_text(std::ostream& os, const ComparisonReport& rep) {
  os << std::left << std::setw(10) << "policy";
  for (auto name : kMetricNames) os << std::setw(18) << name;
  os << '\n';
  for (std::size_t p = 0; p < rep.policies.size(); ++p) {
    os << std::setw(10) << rep.policies[p];
    for (std::size_t k = 0; k < kMetricCount; ++k) {
      std::ostringstream cell;
      cell << std::fixed << std::setprecision(2) << rep.summary[p][k].mean << " +- " << rep.summary[p][k].std;
      os << std::setw(18) << cell.str();
    }
    os << '\n';
  }
  if (rep.tests.empty()) return;
  os << "\none-sided sign tests, * marks p < " << rep.alpha << " (p for a > b / a < b)\n";
  os << std::setw(20) << "pair";
  for (auto name : kMetricNames) os << std::setw(24) << name;
  os << '\n';
  for (std::size_t i = 0; i < rep.tests.size(); i += kMetricCount) {
    os << std::setw(20) << (rep.tests[i].a + " vs " + rep.tests[i].b);
    for (std::size_t k = 0; k < kMetricCount && i + k < rep.tests.size(); ++k) {
      const auto& t = rep.tests[i + k];
      std::ostringstream cell;
      if (std::isnan(t.p_greater))
        cell << "n/a";
      else
        cell << std::scientific << std::setprecision(2) << t.p_greater << '/' << t.p_less << (t.significant ? "*" : "");
      os << std::setw(24) << cell.str();
    }
    os << '\n';
  }
  os << std::right;
}

}  // namespace ap::eval
