#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ap/common/error.hpp"
#include "ap/config/experiment.hpp"
#include "ap/eval/metrics.hpp"
#include "ap/eval/plot.hpp"
#include "ap/eval/rollout.hpp"
#include "ap/eval/statistics.hpp"
#include "ap/imitation/imitation.hpp"

namespace apctl {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

ap::config::ExperimentConfig load(const fs::path& path, const Overrides& o, fs::path* run_root = nullptr) {
  ap::config::ExperimentConfig cfg = ap::config::load_experiment_config(path);
  if (run_root) *run_root = cfg.output;
  if (o.patient) cfg.patient = ap::patient::patient_config_from_string(*o.patient);
  if (o.meals) cfg.meals = *o.meals;
  if (o.seed) cfg.seed = *o.seed;
  if (o.rollouts) cfg.evaluation.rollouts = *o.rollouts;
  if (o.jobs) cfg.jobs = *o.jobs;
  if (o.out) cfg.output = *o.out;
  cfg.validate();
  return cfg;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  return os;
}

std::string meal_label(const std::string& meals) {
  if (meals == "training" || meals == "unseen") return meals;
  return fs::path(meals).stem().string();
}

void write_manifest(const fs::path& dir, const std::string& command, const std::vector<std::string>& argv,
                    json extra) {
  json m = std::move(extra);
  m["command"] = command;
  m["argv"] = argv;
  m["version"] = AP_VERSION;
  auto os = open_out(dir / "manifest.json");
  os << m.dump(2) << '\n';
}

}  // namespace

int cmd_train(const TrainArgs& args, const std::vector<std::string>& argv) {
  const auto cfg = load(args.config, args.overrides);
  const ap::imitation::IlConfig il = cfg.il_config();
  const fs::path dir = cfg.output / args.mode;
  fs::create_directories(dir / "checkpoints");

  ap::Rng rng = ap::make_rng(cfg.seed);
  auto hook = [&](const ap::imitation::IterationLog& log, const ap::policy::PolicyNetwork& net) {
    char name[32];
    std::snprintf(name, sizeof name, "theta_%03zu.bin", log.iteration);
    net.save(dir / "checkpoints" / name);
    std::cout << args.mode << " iteration " << log.iteration << '/' << cfg.iterations << "  rho " << std::fixed
              << std::setprecision(3) << log.rho << "  |S| " << log.dataset_size << "  episode t_eu "
              << std::setprecision(1) << log.episode_t_eu << "%  loss " << std::setprecision(4) << log.final_loss
              << std::endl;
  };
  const ap::imitation::IlResult res =
      args.mode == "sl" ? ap::imitation::run_sl_baseline(il, rng, hook) : ap::imitation::run_il(il, rng, hook);

  res.network.save(dir / "policy.bin");
  {
    auto os = open_out(dir / "dataset.csv");
    ap::imitation::write_dataset_csv(os, res.dataset);
  }
  {
    auto os = open_out(dir / "losses.csv");
    os << "iteration,epoch,loss\n" << std::setprecision(10);
    for (std::size_t i = 0; i < res.losses.size(); ++i)
      for (std::size_t e = 0; e < res.losses[i].epoch_loss.size(); ++e)
        os << i + 1 << ',' << e + 1 << ',' << res.losses[i].epoch_loss[e] << '\n';
  }
  {
    auto os = open_out(dir / "iterations.csv");
    os << "iteration,rho,dataset_size,episode_t_eu,mean_teacher_gap,final_loss\n" << std::setprecision(10);
    for (const auto& l : res.log)
      os << l.iteration << ',' << l.rho << ',' << l.dataset_size << ',' << l.episode_t_eu << ',' << l.mean_teacher_gap
         << ',' << l.final_loss << '\n';
  }
  write_manifest(dir, "train", argv,
                 {{"mode", args.mode}, {"config", ap::config::to_json(cfg)}, {"dataset_size", res.dataset.size()}});
  std::cout << "wrote " << dir.string() << '\n';
  return 0;
}

int cmd_evaluate(const EvaluateArgs& args, const std::vector<std::string>& argv) {
  fs::path run_root;
  const auto cfg = load(args.config, args.overrides, &run_root);
  const ap::eval::PolicyKind kind = ap::eval::policy_from_string(args.policy);

  std::optional<ap::policy::PolicyNetwork> net;
  fs::path checkpoint;
  if (ap::eval::is_learner(kind)) {
    checkpoint = args.checkpoint.empty() ? run_root / "il" / "policy.bin" : args.checkpoint;
    if (!fs::exists(checkpoint)) throw ap::ConfigError("checkpoint '" + checkpoint.string() + "' not found");
    try {
      net = ap::policy::PolicyNetwork::load(checkpoint, &cfg.network);
    } catch (const ap::ShapeError& e) {
      throw ap::ConfigError(std::string(e.what()) + " (network section of the config)");
    }
  }

  const std::string tag = args.policy + "_" + std::string(ap::patient::to_string(cfg.patient)) + "_" + meal_label(cfg.meals);
  const fs::path dir = args.overrides.out ? cfg.output : cfg.output / "eval" / tag;
  fs::create_directories(dir);

  ap::eval::RolloutConfig base;
  base.policy = kind;
  base.patient = cfg.patient;
  base.meals = ap::patient::resolve_meal_spec(cfg.meals);
  base.steps = cfg.evaluation.steps;
  base.init_bg_spread = cfg.evaluation.init_bg_spread;
  base.sensor = cfg.sensor;
  base.mpc = cfg.mpc;
  base.mhe = cfg.mhe;
  base.rule = cfg.decision;
  std::vector<ap::eval::RolloutConfig> runs;
  for (std::size_t i = 0; i < cfg.evaluation.rollouts; ++i) {
    runs.push_back(base);
    runs.back().seed = cfg.seed + cfg.evaluation.seed_offset + i;
  }
  const auto records = ap::eval::run_rollouts(runs, net ? &*net : nullptr, cfg.jobs);

  ap::eval::PolicyResults results{args.policy, std::string(ap::patient::to_string(cfg.patient)), meal_label(cfg.meals), {}, {}};
  auto metrics_os = open_out(dir / "metrics.csv");
  metrics_os << "seed";
  for (auto name : ap::eval::kMetricNames) metrics_os << ',' << name;
  metrics_os << '\n' << std::setprecision(12);
  for (const auto& r : records) {
    {
      auto os = open_out(dir / ("rollout_" + std::to_string(r.seed) + ".csv"));
      ap::eval::write_rollout_csv(os, r);
    }
    const ap::eval::MetricSet m = ap::eval::compute_metrics(r);
    metrics_os << r.seed;
    for (double v : ap::eval::as_array(m)) metrics_os << ',' << v;
    metrics_os << '\n';
    results.seeds.push_back(r.seed);
    results.metrics.push_back(m);
  }
  metrics_os.close();

  const auto report = ap::eval::compare_policies({results}, cfg.evaluation.alpha);
  {
    auto os = open_out(dir / "summary.txt");
    ap::eval::write_report_text(os, report);
  }
  ap::eval::write_report_text(std::cout, report);
  ap::eval::write_bg_profile_plot(dir, "bg_profile", {{args.policy, records}});

  json extra{{"policy", args.policy},
             {"patient", std::string(ap::patient::to_string(cfg.patient))},
             {"meals", meal_label(cfg.meals)},
             {"seeds", results.seeds},
             {"config", ap::config::to_json(cfg)}};
  if (!checkpoint.empty()) extra["checkpoint"] = checkpoint.string();
  write_manifest(dir, "evaluate", argv, extra);
  std::cout << "wrote " << dir.string() << '\n';
  return 0;
}

namespace {

ap::eval::PolicyResults read_results(const fs::path& dir) {
  std::ifstream ms(dir / "manifest.json");
  if (!ms) throw ap::ConfigError(dir.string() + ": no manifest.json (not an evaluate output?)");
  json m;
  try {
    m = json::parse(ms);
  } catch (const json::exception& e) {
    throw ap::ConfigError(dir.string() + "/manifest.json: " + e.what());
  }
  ap::eval::PolicyResults r;
  r.policy = m.value("policy", dir.filename().string());
  r.patient = m.value("patient", "");
  r.meals = m.value("meals", "");

  std::ifstream is(dir / "metrics.csv");
  if (!is) throw ap::ConfigError(dir.string() + ": no metrics.csv");
  std::string line;
  std::getline(is, line);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    std::uint64_t seed = 0;
    ap::eval::MetricSet x;
    if (!(ls >> seed >> x.t_hypo >> x.t_eu >> x.t_hyper >> x.bg_max >> x.bg_min >> x.u_mean))
      throw ap::ConfigError(dir.string() + "/metrics.csv: malformed row");
    r.seeds.push_back(seed);
    r.metrics.push_back(x);
  }
  return r;
}

ap::eval::RolloutRecord read_bg(const fs::path& file) {
  std::ifstream is(file);
  std::string line;
  std::getline(is, line);
  ap::eval::RolloutRecord r;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    double t = 0.0, bg = 0.0;
    char comma = 0;
    if (ls >> t >> comma >> bg) {
      r.t.push_back(t);
      r.bg.push_back(bg);
    }
  }
  return r;
}

}  // namespace

int cmd_compare(const CompareArgs& args, const std::vector<std::string>& argv) {
  std::vector<ap::eval::PolicyResults> results;
  for (const auto& d : args.dirs) results.push_back(read_results(d));
  bool uniform_setting = true;
  for (const auto& r : results)
    uniform_setting = uniform_setting && r.patient == results.front().patient && r.meals == results.front().meals;
  if (!uniform_setting)
    for (auto& r : results) r.policy += "/" + r.patient + "/" + r.meals;

  const auto report = ap::eval::compare_policies(results, args.alpha);
  fs::create_directories(args.out);
  {
    auto os = open_out(args.out / "report.csv");
    ap::eval::write_report_csv(os, report);
  }
  {
    auto os = open_out(args.out / "report.txt");
    ap::eval::write_report_text(os, report);
  }
  ap::eval::write_report_text(std::cout, report);

  std::vector<ap::eval::ProfileGroup> groups;
  for (std::size_t i = 0; i < results.size(); ++i) {
    ap::eval::ProfileGroup g{results[i].policy, {}};
    for (auto seed : results[i].seeds) g.records.push_back(read_bg(args.dirs[i] / ("rollout_" + std::to_string(seed) + ".csv")));
    groups.push_back(std::move(g));
  }
  ap::eval::write_bg_profile_plot(args.out, "bg_profile", groups);

  std::vector<std::string> dirs;
  for (const auto& d : args.dirs) dirs.push_back(d.string());
  write_manifest(args.out, "compare", argv, {{"alpha", args.alpha}, {"inputs", dirs}});
  return 0;
}

}  // namespace apctl
