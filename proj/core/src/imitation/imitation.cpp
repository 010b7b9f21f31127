#include "ap/imitation/imitation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

#include "ap/common/error.hpp"
#include "ap/control/prediction.hpp"
#include "ap/patient/model.hpp"

namespace ap::imitation {

void IlConfig::validate() const {
  if (iterations < 1) throw ConfigError("il: iterations must be >= 1");
  if (episode_steps < 1) throw ConfigError("il: episode_steps must be >= 1");
  if (!(step_minutes > 0.0)) throw ConfigError("il: step_minutes must be > 0");
  if (!(rho_base > 0.0 && rho_base < 1.0)) throw ConfigError("il: rho_base must lie in (0, 1)");
  if (!(init_bg_spread >= 0.0)) throw ConfigError("il: init_bg_spread must be >= 0");
  meals.validate();
  sensor.validate();
  teacher.validate();
  architecture.validate();
  training.validate();
  if (mpc.basal > 0.0) mpc.validate();
}

double rho_schedule(std::size_t iteration, double base) {
  if (iteration < 1) throw std::invalid_argument("rho_schedule: iteration must be >= 1");
  if (!(base > 0.0 && base < 1.0)) throw std::invalid_argument("rho_schedule: base must lie in (0, 1)");
  return 1.0 - std::pow(base, static_cast<double>(iteration - 1));
}

namespace {

IlResult run_loop(const IlConfig& cfg, Rng& rng, const IterationHook& hook, bool adaptive) {
  cfg.validate();
  const patient::PatientParameters params = patient::sample_patient_params(cfg.patient, {}, rng);
  control::MpcConfig mpc = cfg.mpc;
  if (!(mpc.basal > 0.0)) mpc.basal = patient::basal_rate(params, mpc.target_bg);
  mpc.validate();
  const std::size_t np = mpc.prediction_horizon;
  const double dt = cfg.step_minutes;

  IlResult out{policy::PolicyNetwork(cfg.architecture), {}, {}, {}};
  out.network.init_weights(rng);
  out.dataset.reserve(cfg.iterations * cfg.episode_steps);

  for (std::size_t iter = 1; iter <= cfg.iterations; ++iter) {
    const auto clock0 = std::chrono::steady_clock::now();
    IterationLog log;
    log.iteration = iter;
    log.rho = adaptive ? rho_schedule(iter, cfg.rho_base) : 0.0;
    control::TeacherConfig tcfg = cfg.teacher;
    tcfg.rho = log.rho;

    const patient::DisturbanceTrace trace = patient::sample_meal_schedule(cfg.meals, cfg.episode_steps + np + 1, rng, dt);
    const double delta = uniform(rng, -cfg.init_bg_spread, cfg.init_bg_spread);
    patient::PatientState x = patient::shifted_equilibrium(params.at(0.0), mpc.basal, delta);

    policy::HiddenState hidden = out.network.initial_state();
    double u_prev = mpc.basal;
    std::vector<double> warm_sup, warm_teacher;
    std::size_t in_range = 0;
    double gap = 0.0;
    const std::size_t episode = iter - 1;

    for (std::size_t t = 0; t < cfg.episode_steps; ++t) {
      try {
        const double t_min = static_cast<double>(t) * dt;
        const patient::ParamVector lambda = params.at(t_min);
        const double y = patient::cgm_observe(x, lambda, cfg.sensor, rng);
        const std::span<const double> d_future(trace.carbs.data() + t, np);
        const double d_hz = trace[t + np];
        const control::PatientPredictor model(params, t_min, dt);

        const control::MpcSolution sup = control::solve_supervision(model, x.x, d_future, mpc, u_prev, warm_sup, rng);
        double applied = sup.u;
        if (tcfg.rho > 0.0) {
          const policy::PolicyStep ls = policy::policy_step(out.network, hidden, {u_prev, y, d_hz}, tcfg.samples, rng);
          hidden = ls.next;
          const control::MpcSolution teach = control::solve_adaptive_teacher(model, x.x, d_future, mpc, u_prev,
                                                                             ls.samples, tcfg, warm_teacher, rng);
          applied = teach.u;
          warm_teacher = control::shift_warm_start(teach.sequence, mpc);
        } else {
          warm_teacher = control::shift_warm_start(sup.sequence, mpc);
        }
        warm_sup = control::shift_warm_start(sup.sequence, mpc);

        out.dataset.push_back({episode, t, y, u_prev, d_hz, sup.u});
        gap += std::abs(applied - sup.u);
        x = patient::integrate_step(x, lambda, applied, trace.rate(t), dt);
        const double bg = patient::bg_of_state(x, lambda);
        if (bg > 70.0 && bg < 180.0) ++in_range;
        u_prev = applied;
      } catch (const IntegrationError& e) {
        std::ostringstream msg;
        msg << (adaptive ? "il" : "sl") << " iteration " << iter << ", step " << t << ": " << e.what();
        throw IntegrationError(msg.str(), e.compartment());
      }
    }

    const std::vector<policy::Sequence> seqs = to_sequences(out.dataset);
    if (iter == 1) out.network.set_normalization(policy::fit_normalization(seqs));
    policy::TrainHistory hist = policy::train(out.network, seqs, cfg.training, rng);

    log.dataset_size = out.dataset.size();
    log.episode_t_eu = 100.0 * static_cast<double>(in_range) / static_cast<double>(cfg.episode_steps);
    log.mean_teacher_gap = gap / static_cast<double>(cfg.episode_steps);
    log.final_loss = hist.epoch_loss.empty() ? 0.0 : hist.epoch_loss.back();
    log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - clock0).count();
    out.losses.push_back(std::move(hist));
    out.log.push_back(log);
    if (hook) hook(log, out.network);
  }
  return out;
}

}  // namespace

IlResult run_il(const IlConfig& cfg, Rng& rng, const IterationHook& hook) { return run_loop(cfg, rng, hook, true); }

IlResult run_sl_baseline(const IlConfig& cfg, Rng& rng, const IterationHook& hook) {
  return run_loop(cfg, rng, hook, false);
}

std::vector<policy::Sequence> to_sequences(std::span<const TrainingExample> data) {
  std::map<std::size_t, std::vector<const TrainingExample*>> by_episode;
  for (const auto& ex : data) by_episode[ex.episode].push_back(&ex);
  std::vector<policy::Sequence> seqs;
  for (auto& [ep, rows] : by_episode) {
    std::stable_sort(rows.begin(), rows.end(), [](const auto* a, const auto* b) { return a->step < b->step; });
    policy::Sequence s;
    for (const auto* r : rows) {
      s.inputs.push_back({r->u_prev, r->y, r->d_horizon});
      s.labels.push_back(r->label);
    }
    seqs.push_back(std::move(s));
  }
  return seqs;
}

void write_dataset_csv(std::ostream& os, std::span<const TrainingExample> data) {
  os << "episode,step,y,u_prev,d_hz,label\n";
  const auto flags = os.flags();
  const auto prec = os.precision(17);
  for (const auto& ex : data)
    os << ex.episode << ',' << ex.step << ',' << ex.y << ',' << ex.u_prev << ',' << ex.d_horizon << ',' << ex.label
       << '\n';
  os.precision(prec);
  os.flags(flags);
}

std::vector<TrainingExample> read_dataset_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "episode,step,y,u_prev,d_hz,label")
    throw ConfigError("dataset: missing or unexpected header");
  std::vector<TrainingExample> out;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    TrainingExample ex;
    char c1, c2, c3, c4, c5;
    if (!(ls >> ex.episode >> c1 >> ex.step >> c2 >> ex.y >> c3 >> ex.u_prev >> c4 >> ex.d_horizon >> c5 >> ex.label))
      throw ConfigError("dataset: malformed row at line " + std::to_string(lineno));
    out.push_back(ex);
  }
  return out;
}

}  // namespace ap::imitation
