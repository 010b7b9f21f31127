#include <benchmark/benchmark.h>

#include "ap/control/mhe.hpp"
#include "ap/control/mpc.hpp"
#include "ap/control/teacher.hpp"
#include "ap/patient/meals.hpp"
#include "ap/patient/model.hpp"
#include "ap/policy/network.hpp"

namespace {

using namespace ap;

struct Plant {
  patient::PatientParameters params;
  double basal = patient::basal_rate(params, 110.0);
  patient::PatientState x = patient::equilibrium(params.at(0.0), basal);
  std::vector<double> d = [] {
    std::vector<double> v(30, 0.0);
    v[10] = v[11] = v[12] = 25.0;
    return v;
  }();
};

void BM_IntegrateStep(benchmark::State& state) {
  const Plant p;
  const patient::ParamVector lambda = p.params.at(0.0);
  patient::PatientState x = p.x;
  for (auto _ : state) {
    x = patient::integrate_step(x, lambda, p.basal, 1.0, 5.0);
    benchmark::DoNotOptimize(x);
  }
}
BENCHMARK(BM_IntegrateStep);

void BM_SupervisionSolve(benchmark::State& state) {
  const Plant p;
  control::MpcConfig cfg;
  cfg.basal = p.basal;
  cfg.solver.restarts = static_cast<int>(state.range(0));
  const control::PatientPredictor model(p.params, 0.0);
  Rng rng = make_rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(control::solve_supervision(model, p.x.x, p.d, cfg, p.basal, {}, rng));
}
BENCHMARK(BM_SupervisionSolve)->Arg(0)->Arg(3)->Unit(benchmark::kMillisecond);

void BM_TeacherSolve(benchmark::State& state) {
  const Plant p;
  control::MpcConfig cfg;
  cfg.basal = p.basal;
  cfg.solver.restarts = 0;
  const control::PatientPredictor model(p.params, 0.0);
  control::TeacherConfig t;
  t.rho = 0.5;
  std::vector<double> samples(47);
  for (std::size_t i = 0; i < samples.size(); ++i) samples[i] = 5.0 + 0.2 * static_cast<double>(i);
  Rng rng = make_rng(2);
  for (auto _ : state)
    benchmark::DoNotOptimize(control::solve_adaptive_teacher(model, p.x.x, p.d, cfg, p.basal, samples, t, {}, rng));
}
BENCHMARK(BM_TeacherSolve)->Unit(benchmark::kMillisecond);

void BM_MheUpdate(benchmark::State& state) {
  const Plant p;
  control::MovingHorizonEstimator est(p.params, p.x, {});
  double t = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(est.update(t, 110.0));
    est.record_inputs(p.basal, 0.0);
    t += 5.0;
  }
}
BENCHMARK(BM_MheUpdate)->Unit(benchmark::kMillisecond);

policy::PolicyNetwork make_net(std::size_t layers, std::size_t hidden) {
  policy::Architecture a;
  a.layers = layers;
  a.hidden = hidden;
  a.head_units = hidden;
  policy::PolicyNetwork net(a);
  Rng rng = make_rng(3);
  net.init_weights(rng);
  return net;
}

void BM_PolicyForward(benchmark::State& state) {
  const auto net = make_net(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)));
  policy::HiddenState s = net.initial_state();
  for (auto _ : state) {
    auto [next, u] = net.forward(s, {10.0, 120.0, 0.0}, policy::ForwardMode::kDeterministic);
    s = std::move(next);
    benchmark::DoNotOptimize(u);
  }
}
BENCHMARK(BM_PolicyForward)->Args({2, 64})->Args({3, 200})->Unit(benchmark::kMicrosecond);

void BM_PolicySample47(benchmark::State& state) {
  const auto net = make_net(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)));
  const policy::HiddenState s = net.initial_state();
  Rng rng = make_rng(4);
  for (auto _ : state) benchmark::DoNotOptimize(policy::policy_step(net, s, {10.0, 120.0, 0.0}, 47, rng));
}
BENCHMARK(BM_PolicySample47)->Args({2, 64})->Args({3, 200})->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
