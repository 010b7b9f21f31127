#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "ap/control/mhe.hpp"
#include "ap/control/mpc.hpp"
#include "ap/control/teacher.hpp"
#include "ap/imitation/imitation.hpp"
#include "ap/patient/parameters.hpp"
#include "ap/patient/sensor.hpp"
#include "ap/policy/decision.hpp"
#include "ap/policy/network.hpp"
#include "ap/policy/train.hpp"

namespace ap::config {

struct EvaluationConfig {
  std::size_t rollouts = 90;
  std::size_t steps = 288;
  std::uint64_t seed_offset = 1000;  // rollout i uses seed + seed_offset + i
  double init_bg_spread = 0.0;
  double alpha = 0.005;
};

/// One experiment. Every field has a default; the file only lists overrides.
struct ExperimentConfig {
  std::uint64_t seed = 1;
  patient::PatientConfig patient = patient::PatientConfig::kFixed;
  std::string meals = "training";      // "training", "unseen" or a path
  std::filesystem::path output = "runs/default";
  std::size_t jobs = 1;

  std::size_t iterations = 34;
  std::size_t episode_steps = 1440;
  double rho_base = 0.8;
  double init_bg_spread = 20.0;

  control::MpcConfig mpc;
  control::MheConfig mhe;
  control::TeacherConfig teacher;
  patient::SensorConfig sensor;
  policy::Architecture network;
  policy::TrainingConfig training;
  policy::DecisionRule decision;
  EvaluationConfig evaluation;

  /// Throws ConfigError naming the offending field.
  void validate() const;

  imitation::IlConfig il_config() const;
};

/// Parses JSON text. Unknown keys and type errors raise ConfigError with the
/// JSON path of the field (and line/column for syntax errors). A relative meal
/// spec path resolves against `base_dir` when given.
ExperimentConfig parse_experiment_config(const std::string& text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Full configuration with every field, suitable for manifests.
nlohmann::json to_json(const ExperimentConfig& cfg);
std::string dump(const ExperimentConfig& cfg);

}  // namespace ap::config
