#include "ap/config/experiment.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <type_traits>

#include <nlohmann/json.hpp>

#include "ap/common/error.hpp"

namespace ap::config {

using nlohmann::json;

namespace {

class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + ": expected an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    const json& v = j_.at(key);
    const std::string field = path_ + "." + key;
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(field + ": expected true or false");
      out = v.get<bool>();
    } else if constexpr (std::is_integral_v<T> && std::is_unsigned_v<T>) {
      if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0))
        throw ConfigError(field + ": expected a non-negative integer");
      out = v.get<T>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError(field + ": expected an integer");
      out = v.get<T>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError(field + ": expected a number");
      out = v.get<T>();
    } else {
      if (!v.is_string()) throw ConfigError(field + ": expected a string");
      out = v.get<std::string>();
    }
  }

  Section child(const char* key) {
    seen_.insert(key);
    static const json empty = json::object();
    return Section(j_.contains(key) ? j_.at(key) : empty, path_ + "." + key);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(path_ + "." + it.key() + ": unknown field");
  }

  std::string where() const { return path_; }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_solver(Section s, control::SolverOptions& o) {
  s.get("max_iterations", o.max_iterations);
  s.get("grad_tol", o.grad_tol);
  s.get("step_tol", o.step_tol);
  s.get("restarts", o.restarts);
  s.get("restart_iterations", o.restart_iterations);
  s.finish();
}

std::string line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

void ExperimentConfig::validate() const {
  auto wrap = [](const char* section, auto&& fn) {
    try {
      fn();
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("$.") + section + ": " + e.what());
    }
  };
  if (jobs < 1) throw ConfigError("$.jobs: must be >= 1");
  if (iterations < 1) throw ConfigError("$.iterations: must be >= 1");
  if (episode_steps < 1) throw ConfigError("$.episode_steps: must be >= 1");
  if (!(rho_base > 0.0 && rho_base < 1.0)) throw ConfigError("$.rho_base: must lie in (0, 1)");
  if (!(init_bg_spread >= 0.0)) throw ConfigError("$.init_bg_spread: must be >= 0");
  if (meals.empty()) throw ConfigError("$.meals: must name a meal spec");
  if (evaluation.rollouts < 1) throw ConfigError("$.evaluation.rollouts: must be >= 1");
  if (evaluation.steps < 1) throw ConfigError("$.evaluation.steps: must be >= 1");
  if (!(evaluation.alpha > 0.0 && evaluation.alpha < 1.0)) throw ConfigError("$.evaluation.alpha: must lie in (0, 1)");
  wrap("mpc", [&] {
    control::MpcConfig m = mpc;
    if (!(m.basal > 0.0)) m.basal = 1e-6;
    m.validate();
  });
  wrap("mhe", [&] { mhe.validate(); });
  wrap("teacher", [&] { teacher.validate(); });
  wrap("sensor", [&] { sensor.validate(); });
  wrap("network", [&] { network.validate(); });
  wrap("training", [&] { training.validate(); });
  wrap("decision", [&] { decision.validate(); });
}

imitation::IlConfig ExperimentConfig::il_config() const {
  imitation::IlConfig il;
  il.iterations = iterations;
  il.episode_steps = episode_steps;
  il.rho_base = rho_base;
  il.init_bg_spread = init_bg_spread;
  il.patient = patient;
  il.meals = patient::resolve_meal_spec(meals);
  il.sensor = sensor;
  il.mpc = mpc;
  il.teacher = teacher;
  il.architecture = network;
  il.training = training;
  return il;
}

ExperimentConfig parse_experiment_config(const std::string& text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config syntax error at " + line_col(text, e.byte == 0 ? 0 : e.byte - 1) + ": " + e.what());
  }
  ExperimentConfig c;
  Section root(j, "$");
  std::uint64_t seed = c.seed;
  root.get("seed", seed);
  c.seed = seed;
  std::string patient_tag(patient::to_string(c.patient));
  root.get("patient", patient_tag);
  try {
    c.patient = patient::patient_config_from_string(patient_tag);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("$.patient: ") + e.what());
  }
  root.get("meals", c.meals);
  if (c.meals != "training" && c.meals != "unseen" && !base_dir.empty() && std::filesystem::path(c.meals).is_relative())
    c.meals = (base_dir / c.meals).string();
  std::string out = c.output.string();
  root.get("output", out);
  c.output = out;
  root.get("jobs", c.jobs);
  root.get("iterations", c.iterations);
  root.get("episode_steps", c.episode_steps);
  root.get("rho_base", c.rho_base);
  root.get("init_bg_spread", c.init_bg_spread);

  {
    Section s = root.child("mpc");
    s.get("prediction_horizon", c.mpc.prediction_horizon);
    s.get("control_horizon", c.mpc.control_horizon);
    s.get("beta", c.mpc.beta);
    s.get("u_max", c.mpc.u_max);
    s.get("basal", c.mpc.basal);
    s.get("target_bg", c.mpc.target_bg);
    s.get("w_hypo", c.mpc.w_hypo);
    s.get("w_hyper", c.mpc.w_hyper);
    read_solver(s.child("solver"), c.mpc.solver);
    s.finish();
  }
  {
    Section s = root.child("mhe");
    s.get("lookback", c.mhe.lookback);
    s.get("output_weight", c.mhe.output_weight);
    s.get("prior_weight", c.mhe.prior_weight);
    read_solver(s.child("solver"), c.mhe.solver);
    s.finish();
  }
  {
    Section s = root.child("teacher");
    s.get("samples", c.teacher.samples);
    s.get("order", c.teacher.order);
    s.get("match_scale", c.teacher.match_scale);
    s.finish();
  }
  {
    Section s = root.child("sensor");
    s.get("noise_std", c.sensor.noise_std);
    s.get("cgm_period", c.sensor.cgm_period);
    s.finish();
  }
  {
    Section s = root.child("network");
    s.get("layers", c.network.layers);
    s.get("hidden", c.network.hidden);
    s.get("head_units", c.network.head_units);
    s.get("dropout", c.network.dropout);
    s.finish();
  }
  {
    Section s = root.child("training");
    s.get("epochs", c.training.epochs);
    s.get("truncation", c.training.truncation);
    s.get("batch", c.training.batch);
    s.get("burn_in", c.training.burn_in);
    s.get("learning_rate", c.training.learning_rate);
    s.get("clip_norm", c.training.clip_norm);
    s.finish();
  }
  {
    Section s = root.child("decision");
    s.get("samples", c.decision.samples);
    s.get("bg_lb", c.decision.bg_lb);
    s.get("bg_ub", c.decision.bg_ub);
    s.finish();
  }
  {
    Section s = root.child("evaluation");
    s.get("rollouts", c.evaluation.rollouts);
    s.get("steps", c.evaluation.steps);
    std::uint64_t off = c.evaluation.seed_offset;
    s.get("seed_offset", off);
    c.evaluation.seed_offset = off;
    s.get("init_bg_spread", c.evaluation.init_bg_spread);
    s.get("alpha", c.evaluation.alpha);
    s.finish();
  }
  root.finish();
  c.network.u_max = c.mpc.u_max;
  c.decision.u_max = c.mpc.u_max;
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_experiment_config(ss.str(), path.parent_path());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

namespace {

json solver_json(const control::SolverOptions& o) {
  return {{"max_iterations", o.max_iterations}, {"grad_tol", o.grad_tol},     {"step_tol", o.step_tol},
          {"restarts", o.restarts},             {"restart_iterations", o.restart_iterations}};
}

}  // namespace

json to_json(const ExperimentConfig& c) {
  return {
      {"seed", c.seed},
      {"patient", std::string(patient::to_string(c.patient))},
      {"meals", c.meals},
      {"output", c.output.string()},
      {"jobs", c.jobs},
      {"iterations", c.iterations},
      {"episode_steps", c.episode_steps},
      {"rho_base", c.rho_base},
      {"init_bg_spread", c.init_bg_spread},
      {"mpc",
       {{"prediction_horizon", c.mpc.prediction_horizon},
        {"control_horizon", c.mpc.control_horizon},
        {"beta", c.mpc.beta},
        {"u_max", c.mpc.u_max},
        {"basal", c.mpc.basal},
        {"target_bg", c.mpc.target_bg},
        {"w_hypo", c.mpc.w_hypo},
        {"w_hyper", c.mpc.w_hyper},
        {"solver", solver_json(c.mpc.solver)}}},
      {"mhe",
       {{"lookback", c.mhe.lookback},
        {"output_weight", c.mhe.output_weight},
        {"prior_weight", c.mhe.prior_weight},
        {"solver", solver_json(c.mhe.solver)}}},
      {"teacher", {{"samples", c.teacher.samples}, {"order", c.teacher.order}, {"match_scale", c.teacher.match_scale}}},
      {"sensor", {{"noise_std", c.sensor.noise_std}, {"cgm_period", c.sensor.cgm_period}}},
      {"network",
       {{"layers", c.network.layers},
        {"hidden", c.network.hidden},
        {"head_units", c.network.head_units},
        {"dropout", c.network.dropout}}},
      {"training",
       {{"epochs", c.training.epochs},
        {"truncation", c.training.truncation},
        {"batch", c.training.batch},
        {"burn_in", c.training.burn_in},
        {"learning_rate", c.training.learning_rate},
        {"clip_norm", c.training.clip_norm}}},
      {"decision", {{"samples", c.decision.samples}, {"bg_lb", c.decision.bg_lb}, {"bg_ub", c.decision.bg_ub}}},
      {"evaluation",
       {{"rollouts", c.evaluation.rollouts},
        {"steps", c.evaluation.steps},
        {"seed_offset", c.evaluation.seed_offset},
        {"init_bg_spread", c.evaluation.init_bg_spread},
        {"alpha", c.evaluation.alpha}}},
  };
}

std::string dump(const ExperimentConfig& cfg) { return to_json(cfg).dump(2); }

}  // namespace ap::config
