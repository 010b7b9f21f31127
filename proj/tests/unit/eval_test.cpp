#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "ap/common/error.hpp"
#include "ap/eval/metrics.hpp"
#include "ap/eval/rollout.hpp"
#include "ap/eval/statistics.hpp"
#include "ap/patient/model.hpp"
#include "oracles.hpp"

namespace ap::eval {
namespace {

RolloutRecord record_with_bg(std::vector<double> bg) {
  RolloutRecord r;
  r.bg = std::move(bg);
  r.u.assign(r.bg.size(), 2.0);
  return r;
}

TEST(Metrics, Examples) {
  const MetricSet flat = compute_metrics(record_with_bg(std::vector<double>(100, 120.0)));
  EXPECT_EQ(flat.t_hypo, 0.0);
  EXPECT_EQ(flat.t_eu, 100.0);
  EXPECT_EQ(flat.t_hyper, 0.0);
  EXPECT_EQ(flat.u_mean, 2.0);

  std::vector<double> split(50, 60.0);
  split.insert(split.end(), 50, 200.0);
  const MetricSet half = compute_metrics(record_with_bg(split));
  EXPECT_EQ(half.t_hypo, 50.0);
  EXPECT_EQ(half.t_eu, 0.0);
  EXPECT_EQ(half.t_hyper, 50.0);
  EXPECT_EQ(half.bg_min, 60.0);
  EXPECT_EQ(half.bg_max, 200.0);

  std::vector<double> mixed(10, 65.0);
  mixed.insert(mixed.end(), 70, 120.0);
  mixed.insert(mixed.end(), 20, 190.0);
  const MetricSet m = compute_metrics(record_with_bg(mixed));
  EXPECT_DOUBLE_EQ(m.t_hypo, 10.0);
  EXPECT_DOUBLE_EQ(m.t_eu, 70.0);
  EXPECT_DOUBLE_EQ(m.t_hyper, 20.0);

  const MetricSet edges = compute_metrics(record_with_bg({70.0, 180.0, 70.0001, 179.999}));
  EXPECT_EQ(edges.t_hypo, 25.0);
  EXPECT_EQ(edges.t_hyper, 25.0);
  EXPECT_EQ(edges.t_eu, 50.0);
}

TEST(Metrics, PartitionIsExhaustive) {
  Rng rng = make_rng(1);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> bg(1 + rep % 97);
    for (auto& v : bg) v = uniform(rng, 40.0, 300.0);
    const MetricSet m = compute_metrics(record_with_bg(bg));
    EXPECT_NEAR(m.t_hypo + m.t_eu + m.t_hyper, 100.0, 1e-9);
    EXPECT_LE(m.bg_min, m.bg_max);
  }
}

TEST(SignTest, Examples) {
  EXPECT_NEAR(sign_test(std::vector<double>(10, 1.0), Direction::kGreater), std::pow(2.0, -10), 1e-15);
  std::vector<double> even(5, 1.0);
  even.insert(even.end(), 5, -1.0);
  EXPECT_NEAR(sign_test(even, Direction::kGreater), 638.0 / 1024.0, 1e-12);
  EXPECT_DOUBLE_EQ(sign_test(std::vector<double>{3.0}, Direction::kGreater), 0.5);
  EXPECT_DOUBLE_EQ(sign_test(std::vector<double>{3.0, 0.0, 0.0}, Direction::kLess), 1.0);
  EXPECT_THROW(sign_test(std::vector<double>{0.0, 0.0}, Direction::kGreater), StatisticsError);
}

TEST(SignTest, MatchesEnumeration) {
  Rng rng = make_rng(2);
  for (unsigned m = 1; m <= 20; ++m) {
    for (unsigned k = 0; k <= m; ++k) {
      std::vector<double> d;
      for (unsigned i = 0; i < k; ++i) d.push_back(uniform(rng, 0.1, 5.0));
      for (unsigned i = k; i < m; ++i) d.push_back(-uniform(rng, 0.1, 5.0));
      d.push_back(0.0);
      EXPECT_NEAR(sign_test(d, Direction::kGreater), testing::binomial_tail_enumeration(m, k), 1e-12);
      EXPECT_NEAR(sign_test(d, Direction::kLess), testing::binomial_tail_enumeration(m, m - k), 1e-12);
    }
  }
}

TEST(KsTest, Examples) {
  const std::vector<double> a{1.0, 2.0, 3.0, 4.0};
  const KsResult same = ks_two_sample(a, a);
  EXPECT_EQ(same.statistic, 0.0);
  EXPECT_EQ(same.p_value, 1.0);
  const KsResult disjoint = ks_two_sample(a, std::vector<double>{10.0, 11.0, 12.0});
  EXPECT_EQ(disjoint.statistic, 1.0);

  Rng rng = make_rng(3);
  std::vector<double> u1(1000), u2(1000);
  for (auto& v : u1) v = uniform(rng, 0.0, 1.0);
  for (auto& v : u2) v = uniform(rng, 0.2, 1.2);
  const KsResult shifted = ks_two_sample(u1, u2);
  EXPECT_NEAR(shifted.statistic, 0.2, 0.03);
  EXPECT_LT(shifted.p_value, 1e-10);

  EXPECT_THROW(ks_two_sample(std::vector<double>{1.0}, a), StatisticsError);
  EXPECT_THROW(ks_two_sample(std::vector<double>{1.0, NAN}, a), StatisticsError);
}

TEST(KsTest, StatisticMatchesBruteForce) {
  Rng rng = make_rng(4);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> a(2 + rep % 40), b(2 + (rep * 7) % 53);
    // Rounding creates ties within and across samples.
    for (auto& v : a) v = std::round(uniform(rng, 0.0, 20.0));
    for (auto& v : b) v = std::round(uniform(rng, 3.0, 25.0));
    EXPECT_NEAR(ks_two_sample(a, b).statistic, testing::ks_statistic_bruteforce(a, b), 1e-12);
  }
}

TEST(KsTest, KolmogorovSurvival) {
  EXPECT_NEAR(kolmogorov_survival(0.0), 1.0, 1e-12);
  EXPECT_NEAR(kolmogorov_survival(1.3581), 0.05, 1e-4);
  EXPECT_NEAR(kolmogorov_survival(1.2238), 0.10, 1e-4);
  EXPECT_NEAR(kolmogorov_survival(1.6276), 0.01, 1e-4);
  // Both evaluation branches agree near the switch point.
  EXPECT_NEAR(kolmogorov_survival(1.18 - 1e-9), kolmogorov_survival(1.18 + 1e-9), 1e-8);
  double prev = 1.0;
  for (double l = 0.05; l < 4.0; l += 0.05) {
    EXPECT_LE(kolmogorov_survival(l), prev + 1e-15);
    prev = kolmogorov_survival(l);
  }
}

TEST(CovSeries, Examples) {
  RolloutRecord r;
  r.samples = {{2.0, 2.0, 2.0}, {1.0, 3.0}, {0.0, 0.0}};
  const CovSeries c = cov_series({r});
  ASSERT_EQ(c.values.size(), 2u);
  EXPECT_EQ(c.values[0], 0.0);
  EXPECT_DOUBLE_EQ(c.values[1], 0.5);
  EXPECT_EQ(c.skipped, 1u);
  EXPECT_THROW(cov_series({RolloutRecord{}}), std::invalid_argument);
}

PolicyResults results(std::string policy, const std::vector<double>& t_eu) {
  PolicyResults r;
  r.policy = std::move(policy);
  for (std::size_t i = 0; i < t_eu.size(); ++i) {
    r.seeds.push_back(100 + i);
    MetricSet m;
    m.t_eu = t_eu[i];
    m.t_hyper = 100.0 - t_eu[i];
    m.u_mean = 3.0;
    r.metrics.push_back(m);
  }
  return r;
}

TEST(ComparePolicies, IdenticalResultsAreNeverSignificant) {
  const auto a = results("a", {90, 95, 80, 85});
  auto b = a;
  b.policy = "b";
  const ComparisonReport rep = compare_policies({a, b}, 0.05);
  ASSERT_EQ(rep.tests.size(), kMetricCount);
  for (const auto& t : rep.tests) {
    EXPECT_FALSE(t.significant);
    EXPECT_TRUE(std::isnan(t.p_greater));
  }
  std::ostringstream text;
  write_report_text(text, rep);
  EXPECT_NE(text.str().find("n/a"), std::string::npos);
}

TEST(ComparePolicies, DominanceGivesExactTail) {
  const auto a = results("slp-a", {91, 95, 90, 97, 93, 92, 99, 94});
  const auto b = results("mpc-se", {80, 85, 81, 70, 88, 79, 90, 84});
  const ComparisonReport rep = compare_policies({a, b}, 0.005);
  const auto& t = rep.tests[1];
  EXPECT_EQ(kMetricNames[t.metric], "t_eu");
  EXPECT_DOUBLE_EQ(t.p_greater, std::pow(2.0, -8));
  EXPECT_DOUBLE_EQ(t.p_less, 1.0);
  EXPECT_TRUE(t.significant);
  EXPECT_DOUBLE_EQ(rep.summary[0][1].mean, 93.875);
  std::ostringstream csv;
  write_report_csv(csv, rep);
  EXPECT_EQ(csv.str().rfind("section,policy_a,policy_b,metric,mean_a,std_a,p_greater,p_less,significant\n", 0), 0u);
}

TEST(ComparePolicies, ReportFormatsMeanAndStd) {
  ComparisonReport rep;
  rep.policies = {"mpc-se", "slp-a"};
  rep.summary.resize(2);
  rep.summary[0][1] = {80.40, 5.33};
  rep.summary[1][1] = {91.73, 3.45};
  std::ostringstream os;
  write_report_text(os, rep);
  EXPECT_NE(os.str().find("80.40 +- 5.33"), std::string::npos);
  EXPECT_NE(os.str().find("91.73 +- 3.45"), std::string::npos);
}

TEST(ComparePolicies, SeedMismatchIsRejected) {
  const auto a = results("a", {1, 2, 3});
  auto b = results("b", {1, 2, 3});
  b.seeds[2] = 7;
  EXPECT_THROW(compare_policies({a, b}, 0.05), ConfigError);
}

TEST(Summary, SampleStandardDeviation) {
  const auto s = summarize(results("a", {1, 2, 3, 4}).metrics);
  EXPECT_DOUBLE_EQ(s[1].mean, 2.5);
  EXPECT_DOUBLE_EQ(s[1].std, std::sqrt(5.0 / 3.0));
}

RolloutConfig short_config(PolicyKind p, std::uint64_t seed) {
  RolloutConfig c;
  c.policy = p;
  c.meals = patient::resolve_meal_spec("training");
  c.seed = seed;
  c.steps = 72;
  c.patient = patient::PatientConfig::kVarying;
  c.mpc.solver.restarts = 0;
  return c;
}

policy::PolicyNetwork constant_policy(double u) {
  policy::Architecture arch;
  arch.layers = 1;
  arch.hidden = 4;
  arch.head_units = 4;
  policy::PolicyNetwork net(arch);
  policy::Normalization n;
  n.out_mean = u;
  net.set_normalization(n);
  return net;
}

TEST(Rollout, MatchedSeedsShareTheDay) {
  const policy::PolicyNetwork net = constant_policy(10.0);
  const RolloutRecord a = rollout(short_config(PolicyKind::kMpcSi, 5));
  const RolloutRecord b = rollout(short_config(PolicyKind::kSlpA, 5), &net);
  EXPECT_EQ(a.d, b.d);
  EXPECT_EQ(a.bg.front(), b.bg.front());
  EXPECT_EQ(a.cgm.front(), b.cgm.front());
  EXPECT_EQ(a.size(), 72u);
  EXPECT_EQ(b.samples.size(), 72u);
  EXPECT_EQ(b.samples.front().size(), 47u);
  const RolloutRecord c = rollout(short_config(PolicyKind::kMpcSi, 6));
  EXPECT_NE(a.d, c.d);
}

TEST(Rollout, ZeroCarbDayStaysInRange) {
  patient::MealDistributionSpec none = patient::resolve_meal_spec("training");
  for (auto& slot : none.slots) slot.probability_pct = 0.0;
  const patient::PatientParameters nominal;
  const double basal = patient::basal_rate(nominal, 110.0);
  const policy::PolicyNetwork net = constant_policy(basal);
  for (auto p : {PolicyKind::kMpcSi, PolicyKind::kMpcSe, PolicyKind::kDlp, PolicyKind::kSlpM, PolicyKind::kSlpA}) {
    RolloutConfig c = short_config(p, 7);
    c.patient = patient::PatientConfig::kFixed;
    c.meals = none;
    const MetricSet m = compute_metrics(rollout(c, &net));
    EXPECT_EQ(m.t_eu, 100.0) << to_string(p);
  }
}

TEST(Rollout, PatientWithoutInsulinNeedStartsAtZeroInsulinEquilibrium) {
  // Seed 1024 draws a cohort patient whose glucose settles near 71 mg/dL without insulin.
  Rng rng = make_rng(1024, 1);
  const patient::PatientParameters p = patient::sample_patient_params(patient::PatientConfig::kCohort, {}, rng);
  const double settled = patient::steady_state_glucose(p.at(0.0), 0.0) * patient::kMgdlPerMmol;
  ASSERT_LT(settled, 110.0);
  RolloutConfig c = short_config(PolicyKind::kMpcSi, 1024);
  c.patient = patient::PatientConfig::kCohort;
  c.steps = 2;
  const RolloutRecord r = rollout(c);
  EXPECT_NEAR(r.bg.front(), settled, 1e-6 * settled);
}

TEST(Rollout, LearnerWithoutNetworkIsRejected) {
  EXPECT_THROW(rollout(short_config(PolicyKind::kDlp, 1)), ConfigError);
  EXPECT_THROW(policy_from_string("pid"), ConfigError);
  EXPECT_EQ(policy_from_string("mpc-se"), PolicyKind::kMpcSe);
}

TEST(Rollout, ParallelRunsMatchSerialRuns) {
  const policy::PolicyNetwork net = constant_policy(8.0);
  std::vector<RolloutConfig> cfgs;
  for (std::uint64_t s = 1; s <= 4; ++s) cfgs.push_back(short_config(PolicyKind::kSlpM, s));
  const auto serial = run_rollouts(cfgs, &net, 1);
  const auto parallel = run_rollouts(cfgs, &net, 3);
  for (std::size_t i = 0; i < cfgs.size(); ++i) {
    EXPECT_EQ(serial[i].bg, parallel[i].bg);
    EXPECT_EQ(serial[i].u, parallel[i].u);
  }
  std::ostringstream os;
  write_rollout_csv(os, serial[0]);
  EXPECT_EQ(os.str().rfind("t,bg,cgm,u,d,s1,", 0), 0u);
}

}  // namespace
}  // namespace ap::eval
