#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "ap/control/mhe.hpp"
#include "ap/control/mpc.hpp"
#include "ap/patient/meals.hpp"
#include "ap/patient/parameters.hpp"
#include "ap/patient/sensor.hpp"
#include "ap/policy/decision.hpp"
#include "ap/policy/network.hpp"

namespace ap::eval {

enum class PolicyKind { kMpcSi, kMpcSe, kDlp, kSlpM, kSlpA };

std::string_view to_string(PolicyKind p) noexcept;
PolicyKind policy_from_string(std::string_view s);
bool is_learner(PolicyKind p) noexcept;

struct RolloutConfig {
  PolicyKind policy = PolicyKind::kMpcSi;
  patient::PatientConfig patient = patient::PatientConfig::kFixed;
  patient::MealDistributionSpec meals;
  std::uint64_t seed = 1;
  std::size_t steps = 288;        // one day at 5-minute control
  double step_minutes = 5.0;
  double init_bg_spread = 0.0;    // initial BG offset drawn from [-spread, spread] mg/dL
  patient::SensorConfig sensor;
  control::MpcConfig mpc;         // basal 0 means: derive from the nominal model at target_bg
  control::MheConfig mhe;
  policy::DecisionRule rule;      // variant is overridden by `policy`
};

struct RolloutRecord {
  std::string policy;
  std::string patient;
  std::uint64_t seed = 0;
  std::vector<double> t;     // min
  std::vector<double> bg;    // mg/dL, true plasma glucose at the start of each step
  std::vector<double> cgm;   // mg/dL
  std::vector<double> u;     // mU/min
  std::vector<double> d;     // g per step
  std::vector<std::vector<double>> samples;  // predictive samples, stochastic learners only
  std::vector<double> decision_seconds;      // wall time of each control decision

  std::size_t size() const noexcept { return bg.size(); }
};

/// Closed-loop simulation. Patient parameters, meals, initial state and sensor
/// noise come from streams derived from the seed alone, so every policy sees the
/// same day. Controllers predict with the nominal (population) model.
RolloutRecord rollout(const RolloutConfig& cfg, const policy::PolicyNetwork* net = nullptr);

/// Runs the configurations on up to `jobs` threads; results keep the input order.
std::vector<RolloutRecord> run_rollouts(const std::vector<RolloutConfig>& cfgs, const policy::PolicyNetwork* net,
                                        std::size_t jobs);

/// CSV `t,bg,cgm,u,d[,s1..sn]`.
void write_rollout_csv(std::ostream& os, const RolloutRecord& r);

}  // namespace ap::eval
