#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace apctl {

/// Flags that override the experiment file.
struct Overrides {
  std::optional<std::string> patient;
  std::optional<std::string> meals;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> rollouts;
  std::optional<std::size_t> jobs;
  std::optional<std::string> out;
};

struct TrainArgs {
  std::filesystem::path config;
  std::string mode = "il";
  Overrides overrides;
};

struct EvaluateArgs {
  std::filesystem::path config;
  std::string policy;
  std::filesystem::path checkpoint;
  Overrides overrides;
};

struct CompareArgs {
  std::vector<std::filesystem::path> dirs;
  double alpha = 0.005;
  std::filesystem::path out = "compare";
};

/// Return process exit codes: 0 success; config errors and runtime failures
/// propagate as exceptions.
int cmd_train(const TrainArgs& args, const std::vector<std::string>& argv);
int cmd_evaluate(const EvaluateArgs& args, const std::vector<std::string>& argv);
int cmd_compare(const CompareArgs& args, const std::vector<std::string>& argv);

}  // namespace apctl
