#include "ap/control/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace ap::control {

namespace {

double clamp(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }

}  // namespace

double BoxLeastSquares::fd_step(std::size_t /*i*/, double v) const { return 1e-5 * std::max(1.0, std::abs(v)); }

void BoxLeastSquares::jacobian(std::span<const double> z, std::span<const double> r, Eigen::MatrixXd& jac) const {
  const std::size_t n = dim();
  const std::size_t m = residual_count();
  jac.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  std::vector<double> zp(z.begin(), z.end());
  std::vector<double> rp(m), rm(m);
  for (std::size_t j = 0; j < n; ++j) {
    const double h = fd_step(j, z[j]);
    const double up = std::min(upper(j), z[j] + h);
    const double dn = std::max(lower(j), z[j] - h);
    zp[j] = up;
    residuals(zp, rp);
    if (dn < z[j]) {
      zp[j] = dn;
      residuals(zp, rm);
    } else {
      std::copy(r.begin(), r.end(), rm.begin());
    }
    zp[j] = z[j];
    const double span = up - dn;
    for (std::size_t i = 0; i < m; ++i)
      jac(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = span > 0.0 ? (rp[i] - rm[i]) / span : 0.0;
  }
}

double BoxLeastSquares::penalty_prox(double a, double c, double lo, double hi) const {
  auto f = [&](double v) { return 0.5 * a * (v - c) * (v - c) + penalty(v); };
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double x0 = lo, x3 = hi;
  double x1 = x3 - phi * (x3 - x0), x2 = x0 + phi * (x3 - x0);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 200 && x3 - x0 > 1e-12 * std::max(1.0, std::abs(x0) + std::abs(x3)); ++it) {
    if (f1 <= f2) {
      x3 = x2;
      x2 = x1;
      f2 = f1;
      x1 = x3 - phi * (x3 - x0);
      f1 = f(x1);
    } else {
      x0 = x1;
      x1 = x2;
      f1 = f2;
      x2 = x0 + phi * (x3 - x0);
      f2 = f(x2);
    }
  }
  double best = 0.5 * (x0 + x3);
  // Endpoints can be optimal when the minimum sits on the boundary.
  for (double cand : {lo, hi})
    if (f(cand) < f(best)) best = cand;
  return best;
}

double BoxLeastSquares::objective(std::span<const double> z) const {
  std::vector<double> r(residual_count());
  residuals(z, r);
  double s = 0.0;
  for (double v : r) s += v * v;
  if (has_penalty()) s += penalty(z[0]);
  return s;
}

double projected_gradient_norm(const BoxLeastSquares& problem, std::span<const double> z,
                               std::span<const double> grad) {
  double acc = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    double g = grad[i];
    if (i == 0 && problem.has_penalty()) {
      const double h = 1e-7 * std::max(1.0, std::abs(z[0]));
      const double p0 = problem.penalty(z[0]);
      const double left = g + (p0 - problem.penalty(z[0] - h)) / h;
      const double right = g + (problem.penalty(z[0] + h) - p0) / h;
      g = (left <= 0.0 && right >= 0.0) ? 0.0 : (right < 0.0 ? right : left);
    }
    const double step = clamp(z[i] - g, problem.lower(i), problem.upper(i)) - z[i];
    acc += step * step;
  }
  return std::sqrt(acc);
}

namespace {

// min 1/2 d'Ad + g'd + penalty(z0 + d0)  s.t.  lo - z <= d <= hi - z.
Eigen::VectorXd box_qp(const BoxLeastSquares& problem, const Eigen::MatrixXd& a, const Eigen::VectorXd& g,
                       std::span<const double> z) {
  const Eigen::Index n = g.size();
  Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd q = g;  // q = g + A d
  const double scale = 1.0 + g.cwiseAbs().maxCoeff();
  for (int sweep = 0; sweep < 500; ++sweep) {
    double max_change = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      const double aii = a(i, i);
      const double lo = problem.lower(ui) - z[ui];
      const double hi = problem.upper(ui) - z[ui];
      double di;
      if (i == 0 && problem.has_penalty()) {
        const double c = d(0) - q(0) / aii;
        di = problem.penalty_prox(aii, z[0] + c, z[0] + lo, z[0] + hi) - z[0];
      } else {
        di = clamp(d(i) - q(i) / aii, lo, hi);
      }
      const double delta = di - d(i);
      if (delta != 0.0) {
        q += a.col(i) * delta;
        d(i) = di;
        max_change = std::max(max_change, std::abs(delta) * aii);
      }
    }
    if (max_change < 1e-13 * scale) break;
  }
  return d;
}

std::vector<double> project(const BoxLeastSquares& problem, std::vector<double> z) {
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = clamp(z[i], problem.lower(i), problem.upper(i));
  return z;
}

}  // namespace

SolveResult solve_local(const BoxLeastSquares& problem, std::vector<double> z0, const SolverOptions& opt) {
  const std::size_t n = problem.dim();
  const std::size_t m = problem.residual_count();
  SolveResult res;
  res.z = project(problem, std::move(z0));

  std::vector<double> r(m), r_new(m);
  problem.residuals(res.z, r);
  auto sumsq = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
  };
  auto pen = [&](double v) { return problem.has_penalty() ? problem.penalty(v) : 0.0; };
  double f = sumsq(r) + pen(res.z[0]);

  Eigen::MatrixXd jac;
  double mu = 1e-3;
  std::vector<double> z_new(n);
  for (int it = 0; it < opt.max_iterations; ++it) {
    res.iterations = it + 1;
    problem.jacobian(res.z, r, jac);
    const Eigen::Map<const Eigen::VectorXd> rv(r.data(), static_cast<Eigen::Index>(m));
    const Eigen::VectorXd g = 2.0 * jac.transpose() * rv;
    const Eigen::MatrixXd h = 2.0 * jac.transpose() * jac;
    const double gn = projected_gradient_norm(problem, res.z, std::span<const double>(g.data(), n));
    res.grad_norm = gn;
    if (opt.keep_log) res.log.push_back({it, f, pen(res.z[0]), gn});
    if (gn < opt.grad_tol) {
      res.converged = true;
      break;
    }

    const double hmax = std::max(1e-12, h.diagonal().maxCoeff());
    bool accepted = false;
    double step_inf = 0.0, f_new = f;
    for (int attempt = 0; attempt < 30 && !accepted; ++attempt) {
      Eigen::MatrixXd a = h;
      for (Eigen::Index i = 0; i < a.rows(); ++i) a(i, i) += mu * std::max(h(i, i), 1e-9 * hmax) + 1e-14 * hmax;
      const Eigen::VectorXd d = box_qp(problem, a, g, res.z);
      step_inf = d.cwiseAbs().maxCoeff();
      for (std::size_t i = 0; i < n; ++i)
        z_new[i] = clamp(res.z[i] + d(static_cast<Eigen::Index>(i)), problem.lower(i), problem.upper(i));
      problem.residuals(z_new, r_new);
      f_new = sumsq(r_new) + pen(z_new[0]);
      const double predicted = -(g.dot(d) + 0.5 * d.dot(h * d)) + pen(res.z[0]) - pen(z_new[0]);
      if (f_new < f) {
        const double ratio = predicted > 0.0 ? (f - f_new) / predicted : 1.0;
        if (ratio > 0.75) mu = std::max(1e-12, mu / 3.0);
        else if (ratio < 0.25) mu *= 2.0;
        accepted = true;
      } else {
        mu *= 4.0;
        if (step_inf < 1e-14) break;
      }
    }
    if (!accepted) {
      // No descent direction left at this damping level: stationary to working precision.
      res.converged = true;
      break;
    }
    const double decrease = f - f_new;
    res.z = z_new;
    r.swap(r_new);
    f = f_new;
    if (step_inf < opt.step_tol || decrease <= opt.rel_tol * std::max(1.0, f)) {
      res.converged = true;
      break;
    }
  }
  res.objective = f;
  res.penalty = pen(res.z[0]);
  if (opt.keep_log) res.log.push_back({res.iterations, f, res.penalty, res.grad_norm});
  return res;
}

SolveResult solve_multistart(const BoxLeastSquares& problem, std::vector<double> warm, const SolverOptions& opt,
                             Rng& rng) {
  SolveResult best = solve_local(problem, std::move(warm), opt);
  SolverOptions ropt = opt;
  ropt.max_iterations = std::min(opt.max_iterations, opt.restart_iterations);
  for (int k = 0; k < opt.restarts; ++k) {
    std::vector<double> z(problem.dim());
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = uniform(rng, problem.lower(i), problem.upper(i));
    SolveResult cand = solve_local(problem, std::move(z), ropt);
    if (cand.objective < best.objective) best = std::move(cand);
  }
  return best;
}

void write_solver_log_csv(std::ostream& os, const std::vector<IterationLog>& log) {
  os << "step,J,Jm,grad_norm\n";
  for (const auto& e : log) os << e.iteration << ',' << (e.objective - e.penalty) << ',' << e.penalty << ',' << e.grad_norm << '\n';
}

}  // namespace ap::control
