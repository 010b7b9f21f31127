#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ap/common/rng.hpp"
#include "ap/control/mpc.hpp"
#include "ap/control/teacher.hpp"
#include "ap/patient/meals.hpp"
#include "ap/patient/parameters.hpp"
#include "ap/patient/sensor.hpp"
#include "ap/policy/network.hpp"
#include "ap/policy/train.hpp"

namespace ap::imitation {

struct TrainingExample {
  std::size_t episode = 0;
  std::size_t step = 0;
  double y = 0.0;          // CGM, mg/dL
  double u_prev = 0.0;     // action applied at the previous step, mU/min
  double d_horizon = 0.0;  // carbohydrate N_p steps ahead, g
  double label = 0.0;      // supervision action, mU/min
};

struct IlConfig {
  std::size_t iterations = 34;
  std::size_t episode_steps = 1440;  // control steps per episode
  double step_minutes = 5.0;
  double rho_base = 0.8;
  double init_bg_spread = 20.0;      // initial BG offset drawn from [-spread, spread] mg/dL
  patient::PatientConfig patient = patient::PatientConfig::kFixed;
  patient::MealDistributionSpec meals;
  patient::SensorConfig sensor;
  control::MpcConfig mpc;            // basal 0 means: derive from the patient at target_bg
  control::TeacherConfig teacher;
  policy::Architecture architecture;
  policy::TrainingConfig training;

  void validate() const;
};

/// 1 - base^(i-1) for iteration i >= 1.
double rho_schedule(std::size_t iteration, double base);

struct IterationLog {
  std::size_t iteration = 0;
  double rho = 0.0;
  std::size_t dataset_size = 0;
  double episode_t_eu = 0.0;       // % of steps of the generated trajectory in range
  double mean_teacher_gap = 0.0;   // mean |u_T - u*|
  double final_loss = 0.0;
  double seconds = 0.0;
};

struct IlResult {
  policy::PolicyNetwork network;
  std::vector<TrainingExample> dataset;
  std::vector<IterationLog> log;
  std::vector<policy::TrainHistory> losses;  // one per iteration
};

/// Called after every retraining with the iteration's network.
using IterationHook = std::function<void(const IterationLog&, const policy::PolicyNetwork&)>;

/// Imitation learning with the adaptive teacher: the plant follows the teacher,
/// every visited state is labelled by the supervision policy.
IlResult run_il(const IlConfig& cfg, Rng& rng, const IterationHook& hook = {});

/// Supervised baseline: the plant follows the supervision policy.
IlResult run_sl_baseline(const IlConfig& cfg, Rng& rng, const IterationHook& hook = {});

/// Groups examples into per-episode sequences in step order.
std::vector<policy::Sequence> to_sequences(std::span<const TrainingExample> data);

/// CSV `episode,step,y,u_prev,d_hz,label`.
void write_dataset_csv(std::ostream& os, std::span<const TrainingExample> data);
std::vector<TrainingExample> read_dataset_csv(std::istream& is);

}  // namespace ap::imitation
