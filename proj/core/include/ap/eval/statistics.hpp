#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ap/eval/metrics.hpp"

namespace ap::eval {

enum class Direction { kGreater, kLess };

/// Exact one-sided sign test on paired differences; zeros are discarded.
/// kGreater tests whether positive differences dominate. Throws StatisticsError
/// when every difference is zero.
double sign_test(std::span<const double> diffs, Direction direction);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Two-sample Kolmogorov-Smirnov test with the asymptotic Kolmogorov p-value at
/// effective size n1 n2 / (n1 + n2).
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

/// Survival function of the Kolmogorov distribution, P(K > lambda).
double kolmogorov_survival(double lambda);

struct PolicyResults {
  std::string policy;
  std::string patient;
  std::string meals;
  std::vector<std::uint64_t> seeds;
  std::vector<MetricSet> metrics;  // aligned with seeds
};

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation
};

struct PairwiseTest {
  std::string a, b;
  std::size_t metric = 0;
  double p_greater = 1.0;  // a > b; NaN when all differences are zero
  double p_less = 1.0;     // a < b
  bool significant = false;
};

struct ComparisonReport {
  double alpha = 0.005;
  std::vector<std::string> policies;
  std::vector<std::array<MetricSummary, kMetricCount>> summary;  // aligned with policies
  std::vector<PairwiseTest> tests;
};

std::array<MetricSummary, kMetricCount> summarize(const std::vector<MetricSet>& metrics);

/// Mean and std per metric and one-sided sign tests for every policy pair and
/// metric. Throws ConfigError when the seed lists differ.
ComparisonReport compare_policies(const std::vector<PolicyResults>& results, double alpha);

void write_report_csv(std::ostream& os, const ComparisonReport& report);
void write_report_text(std::ostream& os, const ComparisonReport& report);

}  // namespace ap::eval
