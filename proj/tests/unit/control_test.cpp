#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ap/common/error.hpp"
#include "ap/control/mhe.hpp"
#include "ap/control/mpc.hpp"
#include "ap/control/prediction.hpp"
#include "ap/control/teacher.hpp"
#include "ap/patient/model.hpp"
#include "ap/patient/sensor.hpp"
#include "oracles.hpp"
#include "surrogate.hpp"

namespace ap::control {
namespace {

using patient::PatientParameters;
using patient::PatientState;

struct Loop {
  PatientParameters params;
  double basal = patient::basal_rate(params, 110.0);
  PatientState x = patient::equilibrium(params.at(0.0), basal);
  MpcConfig cfg = [this] {
    MpcConfig c;
    c.basal = basal;
    c.solver.restarts = 0;
    return c;
  }();
  PatientPredictor model{params, 0.0};
};

TEST(PredictTrajectory, EquilibriumStaysAtTarget) {
  Loop s;
  const std::vector<double> u(30, s.basal), d(30, 0.0);
  const auto traj = predict_trajectory(s.model, s.x, u, d);
  ASSERT_EQ(traj.size(), 31u);
  for (const auto& x : traj) EXPECT_NEAR(patient::bg_of_state(x, s.params.at(0.0)), 110.0, 1.0);
}

TEST(PredictTrajectory, SingleStepMatchesIntegrateStep) {
  Loop s;
  const std::vector<double> u{25.0}, d{10.0};
  const auto traj = predict_trajectory(s.model, s.x, u, d);
  EXPECT_EQ(traj[1], patient::integrate_step(s.x, s.params.at(0.0), 25.0, 10.0 / 5.0, 5.0));
}

TEST(PredictTrajectory, MatchesPlantRolloutBitExactly) {
  Loop s;
  Rng rng = make_rng(3);
  std::vector<double> u(30), d(30);
  for (auto& v : u) v = uniform(rng, 0.0, 40.0);
  for (auto& v : d) v = uniform(rng, 0.0, 1.0) < 0.2 ? uniform(rng, 0.0, 20.0) : 0.0;
  const auto traj = predict_trajectory(s.model, s.x, u, d);
  PatientState x = s.x;
  for (std::size_t k = 0; k < 30; ++k) {
    x = patient::integrate_step(x, s.params.at(5.0 * k), u[k], d[k] / 5.0, 5.0);
    EXPECT_EQ(traj[k + 1], x);
  }
}

TEST(DBg, AsymmetricQuadratic) {
  MpcConfig cfg;
  EXPECT_EQ(d_bg(110.0, cfg), 0.0);
  EXPECT_DOUBLE_EQ(d_bg(90.0, cfg), 1600.0);
  EXPECT_DOUBLE_EQ(d_bg(130.0, cfg), 400.0);
  for (double e = 1.0; e < 100.0; e += 1.0) {
    EXPECT_LT(d_bg(110.0 + e, cfg), d_bg(110.0 + e + 1.0, cfg));
    EXPECT_LT(d_bg(110.0 - e, cfg), d_bg(110.0 - e - 1.0, cfg));
  }
}

TEST(MpcCost, EquilibriumBasalIsNearZero) {
  Loop s;
  const std::vector<double> u(30, s.basal), d(30, 0.0);
  EXPECT_LT(mpc_cost(s.model, s.x.x, d, u, s.cfg, s.basal), 1e-3);
}

TEST(MpcCost, ZeroBetaIgnoresIncrements) {
  testing::ScalarPlant plant;
  plant.b = 0.0;  // insulin has no effect, so the state path is input independent
  MpcConfig cfg;
  cfg.basal = 5.0;
  cfg.beta = 0.0;
  const std::vector<double> x0{150.0}, d(30, 0.0);
  std::vector<double> u1(30, 5.0), u2(30, 5.0);
  for (std::size_t k = 0; k < 20; ++k) u2[k] = k % 2 ? 0.0 : 80.0;
  EXPECT_EQ(mpc_cost(plant, x0, d, u1, cfg, 30.0), mpc_cost(plant, x0, d, u2, cfg, 30.0));
}

TEST(MpcCost, MatchesReferenceImplementation) {
  Loop s;
  Rng rng = make_rng(4);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> u(30), d(30);
    for (auto& v : u) v = uniform(rng, 0.0, 100.0);
    for (auto& v : d) v = uniform(rng, 0.0, 1.0) < 0.2 ? uniform(rng, 0.0, 20.0) : 0.0;
    const double u_prev = uniform(rng, 0.0, 50.0);
    const double j = mpc_cost(s.model, s.x.x, d, u, s.cfg, u_prev);
    const double ref = testing::mpc_cost_reference(s.model, s.x.x, d, u, s.cfg, u_prev);
    EXPECT_LE(std::abs(j - ref), 1e-12 * std::max(1.0, std::abs(ref)));
  }
}

TEST(MpcProblem, ResidualFormMatchesCost) {
  Loop s;
  Rng rng = make_rng(5);
  std::vector<double> d(30, 0.0);
  d[3] = 15.0;
  const MpcProblem problem(s.model, s.x.x, d, s.cfg, 7.0);
  std::vector<double> z(20);
  for (auto& v : z) v = uniform(rng, 0.0, 100.0);
  const double j = mpc_cost(s.model, s.x.x, d, expand_controls(z, s.cfg), s.cfg, 7.0);
  EXPECT_NEAR(problem.objective(z), j, 1e-9 * j);
  EXPECT_NEAR(problem.cost(z), j, 1e-9 * j);
}

TEST(SolveSupervision, EquilibriumReturnsBasal) {
  Loop s;
  Rng rng = make_rng(6);
  const std::vector<double> d(30, 0.0);
  const MpcSolution sol = solve_supervision(s.model, s.x.x, d, s.cfg, s.basal, {}, rng);
  EXPECT_NEAR(sol.u, s.basal, 0.05 * s.basal);
}

TEST(SolveSupervision, ImminentMealRaisesInsulin) {
  Loop s;
  Rng rng = make_rng(7);
  std::vector<double> d(30, 0.0);
  d[0] = d[1] = d[2] = 30.0;
  const MpcSolution sol = solve_supervision(s.model, s.x.x, d, s.cfg, s.basal, {}, rng);
  EXPECT_GT(sol.u, s.basal);
  EXPECT_GE(sol.u, 0.0);
  EXPECT_LE(sol.u, s.cfg.u_max);
}

TEST(SolveSupervision, MatchesGridSearchOnScalarPlant) {
  Rng rng = make_rng(8);
  const testing::ScalarPlant plant;
  for (int rep = 0; rep < 20; ++rep) {
    MpcConfig cfg;
    cfg.prediction_horizon = 1 + rep % 2;
    cfg.control_horizon = 1;
    cfg.basal = 5.0;
    const std::vector<double> x0{uniform(rng, 90.0, 250.0)};
    const std::vector<double> d{uniform(rng, 0.0, 5.0), uniform(rng, 0.0, 5.0)};
    const double u_prev = uniform(rng, 0.0, 100.0);
    const MpcSolution sol = solve_supervision(plant, x0, d, cfg, u_prev, {}, rng);
    double best_u = 0.0, best = INFINITY;
    const int n = 10000;
    for (int i = 0; i <= n; ++i) {
      const double u = cfg.u_max * i / n;
      const double j = mpc_cost(plant, x0, d, expand_controls(std::vector<double>{u}, cfg), cfg, u_prev);
      if (j < best) {
        best = j;
        best_u = u;
      }
    }
    EXPECT_NEAR(sol.u, best_u, cfg.u_max / n + 1e-6) << "instance " << rep;
    EXPECT_LE(sol.cost, best + 1e-9 * std::max(1.0, best));
  }
}

TEST(SolveSupervision, ActionsStayInAdmissibleSet) {
  Loop s;
  Rng rng = make_rng(9);
  for (double delta : {-40.0, 0.0, 80.0}) {
    const PatientState x = patient::shifted_equilibrium(s.params.at(0.0), s.basal, delta);
    std::vector<double> d(30, 0.0);
    d[5] = 20.0;
    const MpcSolution sol = solve_supervision(s.model, x.x, d, s.cfg, s.basal, {}, rng);
    EXPECT_GE(sol.u, 0.0);
    EXPECT_LE(sol.u, s.cfg.u_max);
    for (double v : sol.sequence) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, s.cfg.u_max);
    }
  }
}

TEST(SolveSupervision, SolverLogCsv) {
  Loop s;
  Rng rng = make_rng(10);
  s.cfg.solver.keep_log = true;
  std::vector<double> d(30, 0.0);
  d[0] = 20.0;
  const MpcSolution sol = solve_supervision(s.model, s.x.x, d, s.cfg, s.basal, {}, rng);
  std::ostringstream os;
  write_solver_log_csv(os, sol.detail.log);
  EXPECT_EQ(os.str().rfind("step,J,Jm,grad_norm\n", 0), 0u);
  EXPECT_FALSE(sol.detail.log.empty());
}

TEST(MpcConfig, Validation) {
  MpcConfig c;
  c.basal = 5.0;
  EXPECT_NO_THROW(c.validate());
  MpcConfig bad = c;
  bad.control_horizon = 40;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = c;
  bad.beta = 0.0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = c;
  bad.w_hypo = 0.5;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = c;
  bad.basal = 200.0;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Wasserstein, HandExamples) {
  const std::vector<double> self{10.0};
  EXPECT_EQ(wasserstein_penalty(10.0, self), 0.0);
  const std::vector<double> two{8.0, 12.0};
  EXPECT_DOUBLE_EQ(wasserstein_penalty(10.0, two, 1.0), 2.0);
  EXPECT_DOUBLE_EQ(wasserstein_penalty(10.0, two, 2.0), 2.0);
  EXPECT_THROW(wasserstein_penalty(1.0, std::vector<double>{}), std::invalid_argument);
}

TEST(Wasserstein, MatchesTransportLp) {
  Rng rng = make_rng(11);
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t n = 1 + rep % 10;
    std::vector<double> s(n), w(n, 1.0 / static_cast<double>(n));
    for (auto& v : s) v = uniform(rng, 0.0, 100.0);
    const double u = uniform(rng, 0.0, 100.0);
    const std::vector<double> x{u}, wx{1.0};
    for (double p : {1.0, 2.0}) EXPECT_NEAR(wasserstein_penalty(u, s, p), testing::ot_wasserstein(x, wx, s, w, p), 1e-9);
  }
}

TEST(Wasserstein, ProxIsExactMinimizer) {
  Rng rng = make_rng(12);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> s(1 + rep % 7);
    for (auto& v : s) v = std::round(uniform(rng, 0.0, 20.0));
    std::sort(s.begin(), s.end());
    const double a = uniform(rng, 0.01, 5.0), c = uniform(rng, -5.0, 25.0), w = uniform(rng, 0.0, 30.0);
    const double v = prox_mean_abs(a, c, s, w);
    auto f = [&](double t) { return 0.5 * a * (t - c) * (t - c) + w * wasserstein_penalty(t, s, 1.0); };
    for (double t = -10.0; t <= 30.0; t += 0.01) EXPECT_LE(f(v), f(t) + 1e-9);
  }
}

TEST(AdaptiveTeacher, ZeroRhoEqualsSupervision) {
  Loop s;
  std::vector<double> d(30, 0.0);
  d[4] = d[5] = d[6] = 20.0;
  Rng r1 = make_rng(13), r2 = make_rng(13);
  const MpcSolution sup = solve_supervision(s.model, s.x.x, d, s.cfg, s.basal, {}, r1);
  const std::vector<double> samples(47, 3.0);
  const MpcSolution tea = solve_adaptive_teacher(s.model, s.x.x, d, s.cfg, s.basal, samples, {}, {}, r2);
  EXPECT_NEAR(tea.u, sup.u, 1e-6);
}

TEST(AdaptiveTeacher, LargeRhoFollowsLearner) {
  Loop s;
  std::vector<double> d(30, 0.0);
  d[2] = d[3] = d[4] = 25.0;
  Rng rng = make_rng(14);
  const MpcSolution sup = solve_supervision(s.model, s.x.x, d, s.cfg, s.basal, {}, rng);
  TeacherConfig t;
  t.rho = 1e3 * std::max(1.0, sup.cost);
  for (double c : {2.0, 20.0, 60.0}) {
    const std::vector<double> samples(47, c);
    const MpcSolution tea = solve_adaptive_teacher(s.model, s.x.x, d, s.cfg, s.basal, samples, t, {}, rng);
    EXPECT_NEAR(tea.u, c, 0.05 * c);
  }
}

TEST(AdaptiveTeacher, MatchScaleMultipliesRho) {
  Loop s;
  std::vector<double> d(30, 0.0);
  d[1] = d[2] = 20.0;
  std::vector<double> samples(47);
  Rng rng = make_rng(21);
  for (auto& v : samples) v = uniform(rng, 0.0, 40.0);
  TeacherConfig a, b;
  a.rho = 0.5;
  a.match_scale = 400.0;
  b.rho = 200.0;
  Rng r1 = make_rng(22), r2 = make_rng(22);
  const MpcSolution ta = solve_adaptive_teacher(s.model, s.x.x, d, s.cfg, s.basal, samples, a, {}, r1);
  const MpcSolution tb = solve_adaptive_teacher(s.model, s.x.x, d, s.cfg, s.basal, samples, b, {}, r2);
  EXPECT_DOUBLE_EQ(ta.u, tb.u);
  EXPECT_DOUBLE_EQ(ta.penalty, tb.penalty);
}

TEST(AdaptiveTeacher, InterpolatesBetweenBasalAndSupervision) {
  Loop s;
  std::vector<double> d(30, 0.0);
  d[0] = d[1] = d[2] = 30.0;
  Rng rng = make_rng(15);
  const MpcSolution sup = solve_supervision(s.model, s.x.x, d, s.cfg, s.basal, {}, rng);
  TeacherConfig t;
  t.rho = 0.5;
  const std::vector<double> samples(47, s.basal);
  const MpcSolution tea = solve_adaptive_teacher(s.model, s.x.x, d, s.cfg, s.basal, samples, t, {}, rng);
  EXPECT_GE(tea.u, s.basal - 1e-6);
  EXPECT_LE(tea.u, sup.u + 1e-6);
}

TEST(AdaptiveTeacher, IsSuboptimalForTheMpcCost) {
  Loop s;
  Rng rng = make_rng(16);
  for (int rep = 0; rep < 5; ++rep) {
    std::vector<double> d(30, 0.0);
    d[rep * 3] = 20.0 + 5.0 * rep;
    MpcConfig thorough = s.cfg;
    thorough.solver.restarts = 4;
    const MpcSolution sup = solve_supervision(s.model, s.x.x, d, thorough, s.basal, {}, rng);
    std::vector<double> samples(47);
    for (auto& v : samples) v = uniform(rng, 0.0, 30.0);
    for (double rho : {0.2, 0.9, 50.0}) {
      TeacherConfig t;
      t.rho = rho;
      const MpcSolution tea = solve_adaptive_teacher(s.model, s.x.x, d, s.cfg, s.basal, samples, t, {}, rng);
      EXPECT_GE(tea.cost, sup.cost * (1.0 - 1e-6) - 1e-9);
    }
  }
}

TEST(TeacherConfig, Validation) {
  TeacherConfig t;
  EXPECT_NO_THROW(t.validate());
  t.rho = 1.0;
  EXPECT_THROW(t.validate(), ConfigError);
  t = {};
  t.samples = 0;
  EXPECT_THROW(t.validate(), ConfigError);
  t = {};
  t.order = 0.5;
  EXPECT_THROW(t.validate(), ConfigError);
  t = {};
  t.match_scale = 0.0;
  EXPECT_THROW(t.validate(), ConfigError);
}

struct MheSetup : Loop {
  std::vector<double> y, u, d;
  std::vector<PatientState> truth;

  explicit MheSetup(std::size_t nb, std::uint64_t seed) {
    Rng rng = make_rng(seed);
    PatientState xt = patient::shifted_equilibrium(params.at(0.0), basal, uniform(rng, -20.0, 20.0));
    for (std::size_t k = 0; k <= nb; ++k) {
      truth.push_back(xt);
      y.push_back(patient::bg_of_state(xt, params.at(0.0)));
      u.push_back(uniform(rng, 0.0, 30.0));
      d.push_back(k == 1 ? 15.0 : 0.0);
      xt = patient::integrate_step(xt, params.at(0.0), u.back(), d.back() / 5.0, 5.0);
    }
  }
};

TEST(Mhe, NoiselessRecoversBg) {
  MheSetup m(6, 17);
  MheConfig cfg;
  const PatientState prior = patient::equilibrium(m.params.at(0.0), m.basal);
  const MheResult r = mhe_estimate(m.model, m.y, m.u, std::span(m.d).first(6), prior, cfg);
  EXPECT_NEAR(patient::bg_of_state(r.estimate, m.params.at(0.0)), patient::bg_of_state(m.truth.back(), m.params.at(0.0)), 1.0);
}

TEST(Mhe, PriorAtTruthReturnsTruth) {
  MheSetup m(1, 18);
  MheConfig cfg;
  cfg.lookback = 1;
  const MheResult r = mhe_estimate(m.model, m.y, m.u, std::span(m.d).first(1), m.truth.front(), cfg);
  for (std::size_t i = 0; i < patient::kStateDim; ++i)
    EXPECT_NEAR(r.estimate.x[i], m.truth.back().x[i], 1e-6 * std::max(1.0, std::abs(m.truth.back().x[i])));
}

TEST(Mhe, ModelMismatchIncreasesError) {
  Rng rng = make_rng(19);
  double matched = 0.0, mismatched = 0.0;
  for (int w = 0; w < 30; ++w) {
    MheSetup m(6, 100 + w);
    const PatientState prior = patient::equilibrium(m.params.at(0.0), m.basal);
    const double truth = patient::bg_of_state(m.truth.back(), m.params.at(0.0));
    const MheResult good = mhe_estimate(m.model, m.y, m.u, std::span(m.d).first(6), prior, {});
    matched += std::abs(patient::bg_of_state(good.estimate, m.params.at(0.0)) - truth);

    const PatientParameters other = patient::sample_patient_params(patient::PatientConfig::kCohort, {}, rng);
    PatientParameters model_params = other;
    for (auto& a : model_params.intra_amplitude) a = 0.0;
    const PatientPredictor wrong(model_params, 0.0);
    const MheResult bad = mhe_estimate(wrong, m.y, m.u, std::span(m.d).first(6), prior, {});
    mismatched += std::abs(patient::bg_of_state(bad.estimate, model_params.at(0.0)) - truth);
  }
  EXPECT_GT(mismatched / 30.0, matched / 30.0);
}

TEST(Mhe, ErrorShrinksWithNoise) {
  Loop s;
  auto mean_error = [&](double sigma) {
    Rng rng = make_rng(20);
    patient::SensorConfig sensor;
    sensor.noise_std = sigma;
    const PatientState guess = patient::equilibrium(s.params.at(0.0), s.basal);
    MovingHorizonEstimator est(s.params, guess, {});
    PatientState x = patient::shifted_equilibrium(s.params.at(0.0), s.basal, 15.0);
    double err = 0.0;
    for (int k = 0; k < 36; ++k) {
      const double y = patient::cgm_observe(x, s.params.at(0.0), sensor, rng);
      const PatientState xh = est.update(5.0 * k, y);
      if (k >= 12) err += std::abs(patient::bg_of_state(xh, s.params.at(0.0)) - patient::bg_of_state(x, s.params.at(0.0)));
      const double u = k % 6 == 0 ? 20.0 : s.basal;
      const double d = k == 3 ? 20.0 : 0.0;
      est.record_inputs(u, d);
      x = patient::integrate_step(x, s.params.at(0.0), u, d / 5.0, 5.0);
    }
    return err / 24.0;
  };
  const double e5 = mean_error(5.0), e1 = mean_error(1.0), e0 = mean_error(0.0);
  EXPECT_LT(e1, e5);
  EXPECT_LT(e0, e1);
  EXPECT_LT(e0, 0.5);
}

TEST(Mhe, RejectsShortHistories) {
  Loop s;
  const std::vector<double> y(7, 110.0), u(3, s.basal), d(6, 0.0);
  EXPECT_THROW(mhe_estimate(s.model, y, u, d, s.x, {}), std::invalid_argument);
  MheConfig cfg;
  cfg.lookback = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

}  // namespace
}  // namespace ap::control
