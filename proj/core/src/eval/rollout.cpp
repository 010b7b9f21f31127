#include "ap/eval/rollout.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <memory>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "ap/common/error.hpp"
#include "ap/control/prediction.hpp"
#include "ap/patient/model.hpp"

namespace ap::eval {

std::string_view to_string(PolicyKind p) noexcept {
  switch (p) {
    case PolicyKind::kMpcSi: return "mpc-si";
    case PolicyKind::kMpcSe: return "mpc-se";
    case PolicyKind::kDlp: return "dlp";
    case PolicyKind::kSlpM: return "slp-m";
    case PolicyKind::kSlpA: return "slp-a";
  }
  return "?";
}

PolicyKind policy_from_string(std::string_view s) {
  for (auto p : {PolicyKind::kMpcSi, PolicyKind::kMpcSe, PolicyKind::kDlp, PolicyKind::kSlpM, PolicyKind::kSlpA})
    if (s == to_string(p)) return p;
  throw ConfigError("unknown policy '" + std::string(s) + "' (expected mpc-si, mpc-se, dlp, slp-m or slp-a)");
}

bool is_learner(PolicyKind p) noexcept { return p != PolicyKind::kMpcSi && p != PolicyKind::kMpcSe; }

namespace {

enum Stream : std::uint64_t { kPatient = 1, kMeals, kInitial, kSensor, kPolicy };

}  // namespace

RolloutRecord rollout(const RolloutConfig& cfg, const policy::PolicyNetwork* net) {
  if (is_learner(cfg.policy) && net == nullptr)
    throw ConfigError(std::string(to_string(cfg.policy)) + " requires a trained network");
  cfg.sensor.validate();
  cfg.meals.validate();

  Rng patient_rng = make_rng(cfg.seed, kPatient);
  Rng meal_rng = make_rng(cfg.seed, kMeals);
  Rng init_rng = make_rng(cfg.seed, kInitial);
  Rng sensor_rng = make_rng(cfg.seed, kSensor);
  Rng policy_rng = make_rng(cfg.seed, kPolicy);

  const patient::PatientParameters nominal{};
  const patient::PatientParameters plant = patient::sample_patient_params(cfg.patient, nominal, patient_rng);
  control::MpcConfig mpc = cfg.mpc;
  if (!(mpc.basal > 0.0)) mpc.basal = patient::basal_rate(nominal, mpc.target_bg);
  mpc.validate();
  const std::size_t np = mpc.prediction_horizon;
  const double dt = cfg.step_minutes;

  const patient::DisturbanceTrace trace = patient::sample_meal_schedule(cfg.meals, cfg.steps + np + 1, meal_rng, dt);
  const double delta = uniform(init_rng, -cfg.init_bg_spread, cfg.init_bg_spread);
  // The plant starts at the equilibrium of its own basal rate, or of zero insulin
  // when it settles below target without any.
  const patient::ParamVector p0 = plant.at(0.0);
  const double plant_basal = patient::steady_state_glucose(p0, 0.0) * patient::kMgdlPerMmol <= mpc.target_bg
                                 ? 0.0
                                 : patient::basal_rate(p0, mpc.target_bg);
  patient::PatientState x = patient::shifted_equilibrium(p0, plant_basal, delta);
  const patient::PatientState guess = patient::equilibrium(nominal.at(0.0), mpc.basal);

  RolloutRecord rec;
  rec.policy = std::string(to_string(cfg.policy));
  rec.patient = std::string(patient::to_string(cfg.patient));
  rec.seed = cfg.seed;

  policy::DecisionRule rule = cfg.rule;
  rule.variant = cfg.policy == PolicyKind::kDlp    ? policy::DecisionVariant::kDlp
                 : cfg.policy == PolicyKind::kSlpM ? policy::DecisionVariant::kSlpM
                                                   : policy::DecisionVariant::kSlpA;
  if (is_learner(cfg.policy)) rule.validate();
  const bool stochastic = cfg.policy == PolicyKind::kSlpM || cfg.policy == PolicyKind::kSlpA;

  std::unique_ptr<control::MovingHorizonEstimator> mhe;
  if (cfg.policy == PolicyKind::kMpcSe) mhe = std::make_unique<control::MovingHorizonEstimator>(nominal, guess, cfg.mhe, dt);
  policy::HiddenState hidden;
  if (net) hidden = net->initial_state();

  double u_prev = mpc.basal;
  double y_prev = 0.0;
  std::vector<double> warm;
  for (std::size_t t = 0; t < cfg.steps; ++t) {
    const double t_min = static_cast<double>(t) * dt;
    const patient::ParamVector lambda = plant.at(t_min);
    const double bg = patient::bg_of_state(x, lambda);
    const double y = patient::cgm_observe(x, lambda, cfg.sensor, sensor_rng);
    if (t == 0) y_prev = y;

    const auto clock0 = std::chrono::steady_clock::now();
    double u = 0.0;
    try {
      if (!is_learner(cfg.policy)) {
        const control::PatientPredictor model(nominal, t_min, dt);
        const std::span<const double> d_future(trace.carbs.data() + t, np);
        const patient::PatientState xh = mhe ? mhe->update(t_min, y) : x;
        const control::MpcSolution sol = control::solve_supervision(model, xh.x, d_future, mpc, u_prev, warm, policy_rng);
        warm = control::shift_warm_start(sol.sequence, mpc);
        u = sol.u;
        if (mhe) mhe->record_inputs(u, trace[t]);
      } else {
        const policy::PolicyStep ps =
            policy::policy_step(*net, hidden, {u_prev, y, trace[t + np]}, stochastic ? rule.samples : 0, policy_rng);
        hidden = ps.next;
        u = stochastic ? policy::decide(rule, ps.samples, y_prev) : policy::decide(rule, {&ps.deterministic, 1}, y_prev);
        if (stochastic) rec.samples.push_back(ps.samples);
      }
    } catch (const IntegrationError& e) {
      std::ostringstream msg;
      msg << rec.policy << " seed " << cfg.seed << ", step " << t << ": " << e.what();
      throw IntegrationError(msg.str(), e.compartment());
    }
    rec.decision_seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - clock0).count());

    rec.t.push_back(t_min);
    rec.bg.push_back(bg);
    rec.cgm.push_back(y);
    rec.u.push_back(u);
    rec.d.push_back(trace[t]);
    try {
      x = patient::integrate_step(x, lambda, u, trace.rate(t), dt);
    } catch (const IntegrationError& e) {
      std::ostringstream msg;
      msg << rec.policy << " seed " << cfg.seed << ", step " << t << ": " << e.what();
      throw IntegrationError(msg.str(), e.compartment());
    }
    u_prev = u;
    y_prev = y;
  }
  return rec;
}

std::vector<RolloutRecord> run_rollouts(const std::vector<RolloutConfig>& cfgs, const policy::PolicyNetwork* net,
                                        std::size_t jobs) {
  std::vector<RolloutRecord> out(cfgs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < cfgs.size(); i = next++) {
      try {
        out[i] = rollout(cfgs[i], net);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = cfgs.size();
      }
    }
  };
  const std::size_t n = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(cfgs.size(), 1));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < n; ++i) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

void write_rollout_csv(std::ostream& os, const RolloutRecord& r) {
  const std::size_t n = r.samples.empty() ? 0 : r.samples.front().size();
  os << "t,bg,cgm,u,d";
  for (std::size_t i = 1; i <= n; ++i) os << ",s" << i;
  os << '\n';
  const auto prec = os.precision(10);
  for (std::size_t k = 0; k < r.size(); ++k) {
    os << r.t[k] << ',' << r.bg[k] << ',' << r.cgm[k] << ',' << r.u[k] << ',' << r.d[k];
    if (n > 0)
      for (double s : r.samples[k]) os << ',' << s;
    os << '\n';
  }
  os.precision(prec);
}

}  // namespace ap::eval
