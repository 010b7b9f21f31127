#include "ap/control/teacher.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ap/common/error.hpp"

namespace ap::control {

void TeacherConfig::validate() const {
  if (!(rho >= 0.0 && rho < 1.0)) throw ConfigError("teacher: rho must lie in [0, 1)");
  if (samples < 1) throw ConfigError("teacher: sample count must be >= 1");
  if (!(order >= 1.0)) throw ConfigError("teacher: Wasserstein order must be >= 1");
  if (!(match_scale > 0.0 && std::isfinite(match_scale))) throw ConfigError("teacher: match_scale must be > 0");
}

double wasserstein_penalty(double u_t, std::span<const double> samples, double p) {
  if (samples.empty()) throw std::invalid_argument("wasserstein_penalty: empty sample vector");
  if (!(p >= 1.0)) throw std::invalid_argument("wasserstein_penalty: order must be >= 1");
  double acc = 0.0;
  if (p == 1.0) {
    for (double s : samples) acc += std::abs(s - u_t);
    return acc / static_cast<double>(samples.size());
  }
  for (double s : samples) acc += std::pow(std::abs(s - u_t), p);
  return std::pow(acc / static_cast<double>(samples.size()), 1.0 / p);
}

double prox_mean_abs(double a, double c, std::span<const double> s, double weight) {
  const std::size_t n = s.size();
  if (n == 0 || weight == 0.0) return c;
  const double w = weight / static_cast<double>(n);
  // On the open interval with m samples strictly below v the objective is smooth:
  // a (v - c) + w (m - (n - m)) = 0.
  for (std::size_t m = 0; m <= n; ++m) {
    const double v = c - w * (2.0 * static_cast<double>(m) - static_cast<double>(n)) / a;
    const double lo = m == 0 ? -std::numeric_limits<double>::infinity() : s[m - 1];
    const double hi = m == n ? std::numeric_limits<double>::infinity() : s[m];
    if (v > lo && v < hi) return v;
  }
  // Otherwise the minimizer is a breakpoint whose subdifferential contains zero.
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && s[j] == s[i]) ++j;
    const double below = static_cast<double>(i), above = static_cast<double>(n - j), eq = static_cast<double>(j - i);
    const double base = a * (s[i] - c) + w * (below - above);
    if (base - w * eq <= 0.0 && base + w * eq >= 0.0) return s[i];
    i = j;
  }
  return c;
}

MpcSolution solve_adaptive_teacher(const PredictionModel& model, std::span<const double> x,
                                   std::span<const double> d_future, const MpcConfig& cfg, double u_prev,
                                   std::span<const double> learner_samples, const TeacherConfig& tcfg,
                                   std::span<const double> warm, Rng& rng) {
  LearnerMatching matching;
  matching.rho = tcfg.rho * tcfg.match_scale;
  matching.order = tcfg.order;
  matching.samples.assign(learner_samples.begin(), learner_samples.end());
  std::sort(matching.samples.begin(), matching.samples.end());
  if (tcfg.rho > 0.0 && matching.samples.empty())
    throw std::invalid_argument("solve_adaptive_teacher: rho > 0 requires learner samples");

  const MpcProblem problem(model, x, d_future, cfg, u_prev, &matching);
  std::vector<double> start = warm.size() == cfg.control_horizon ? std::vector<double>(warm.begin(), warm.end())
                                                                 : std::vector<double>(cfg.control_horizon, cfg.basal);
  SolveResult res = solve_multistart(problem, std::move(start), cfg.solver, rng);
  MpcSolution sol;
  sol.u = std::clamp(res.z.front(), 0.0, cfg.u_max);
  sol.sequence = res.z;
  sol.penalty = problem.penalty(res.z.front());
  sol.cost = res.objective - sol.penalty;
  sol.converged = res.converged;
  sol.detail = std::move(res);
  return sol;
}

}  // namespace ap::control
