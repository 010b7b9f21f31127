#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ap/common/error.hpp"
#include "commands.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kRuntimeError = 3;

void add_overrides(CLI::App* cmd, apctl::Overrides& o, bool with_rollouts) {
  cmd->add_option("--patient", o.patient, "Patient configuration")->check(CLI::IsMember({"fixed", "varying", "cohort"}));
  cmd->add_option("--meals", o.meals, "Meal spec: training, unseen or a JSON path");
  cmd->add_option("--seed", o.seed, "Base seed");
  if (with_rollouts) cmd->add_option("--rollouts", o.rollouts, "Number of test rollouts")->check(CLI::PositiveNumber);
  cmd->add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--out", o.out, "Output directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Closed-loop artificial pancreas workbench"};
  app.set_version_flag("--version", AP_VERSION);
  app.require_subcommand(1);

  apctl::TrainArgs train;
  auto* t = app.add_subcommand("train", "Run imitation learning (or the supervised baseline)");
  t->add_option("--config", train.config, "Experiment JSON file")->required()->check(CLI::ExistingFile);
  t->add_option("--mode", train.mode, "il or sl")->check(CLI::IsMember({"il", "sl"}));
  add_overrides(t, train.overrides, false);

  apctl::EvaluateArgs evaluate;
  auto* e = app.add_subcommand("evaluate", "Closed-loop test rollouts for one policy");
  e->add_option("--config", evaluate.config, "Experiment JSON file")->required()->check(CLI::ExistingFile);
  e->add_option("--policy", evaluate.policy, "mpc-si, mpc-se, dlp, slp-m or slp-a")
      ->required()
      ->check(CLI::IsMember({"mpc-si", "mpc-se", "dlp", "slp-m", "slp-a"}));
  e->add_option("--checkpoint", evaluate.checkpoint, "Trained network (learner policies)");
  add_overrides(e, evaluate.overrides, true);

  apctl::CompareArgs compare;
  auto* c = app.add_subcommand("compare", "Compare evaluation directories with sign tests");
  c->add_option("dirs", compare.dirs, "Evaluation output directories")->required()->check(CLI::ExistingDirectory);
  c->add_option("--alpha", compare.alpha, "Significance level")->check(CLI::Range(0.0, 1.0));
  c->add_option("--out", compare.out, "Report directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::CallForVersion& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return kConfigError;
  }

  const std::vector<std::string> args(argv, argv + argc);
  try {
    if (*t) return apctl::cmd_train(train, args);
    if (*e) return apctl::cmd_evaluate(evaluate, args);
    return apctl::cmd_compare(compare, args);
  } catch (const ap::ConfigError& err) {
    std::cerr << "config error: " << err.what() << '\n';
    return kConfigError;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kRuntimeError;
  }
}
