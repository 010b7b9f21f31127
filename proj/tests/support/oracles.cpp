#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ap::testing {

namespace {

// Tableau pivoting on (row r, column q).
void pivot(std::vector<std::vector<double>>& t, std::size_t r, std::size_t q) {
  const double pv = t[r][q];
  for (double& v : t[r]) v /= pv;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (i == r || t[i][q] == 0.0) continue;
    const double f = t[i][q];
    for (std::size_t j = 0; j < t[i].size(); ++j) t[i][j] -= f * t[r][j];
  }
}

// Minimizes the objective held in the last row over columns [0, ncols); Bland's rule.
void run_simplex(std::vector<std::vector<double>>& t, std::vector<std::size_t>& basis, std::size_t ncols) {
  const std::size_t m = basis.size();
  const std::size_t rhs = t[0].size() - 1;
  for (int guard = 0; guard < 100000; ++guard) {
    std::size_t q = ncols;
    for (std::size_t j = 0; j < ncols; ++j)
      if (t[m][j] < -1e-12) {
        q = j;
        break;
      }
    if (q == ncols) return;
    std::size_t r = m;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i) {
      if (t[i][q] > 1e-12) {
        const double ratio = t[i][rhs] / t[i][q];
        if (ratio < best - 1e-15 || (std::abs(ratio - best) <= 1e-15 && basis[i] < basis[r])) {
          best = ratio;
          r = i;
        }
      }
    }
    if (r == m) throw std::runtime_error("simplex: unbounded");
    pivot(t, r, q);
    basis[r] = q;
  }
  throw std::runtime_error("simplex: iteration limit");
}

}  // namespace

double simplex_min(const std::vector<std::vector<double>>& A, const std::vector<double>& b,
                   const std::vector<double>& c) {
  const std::size_t m = A.size(), n = c.size();
  // Columns: n structural, m artificial, rhs.
  std::vector<std::vector<double>> t(m + 1, std::vector<double>(n + m + 1, 0.0));
  std::vector<std::size_t> basis(m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) t[i][j] = A[i][j];
    t[i][n + i] = 1.0;
    t[i][n + m] = b[i];
    basis[i] = n + i;
  }
  // Phase I: minimize the sum of artificials.
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j <= n + m; ++j)
      if (j < n || j == n + m) t[m][j] -= t[i][j];
  run_simplex(t, basis, n + m);
  if (t[m][n + m] < -1e-9) throw std::runtime_error("simplex: infeasible");
  // Drive remaining artificials out of the basis where possible.
  for (std::size_t i = 0; i < m; ++i) {
    if (basis[i] < n) continue;
    for (std::size_t j = 0; j < n; ++j)
      if (std::abs(t[i][j]) > 1e-12) {
        pivot(t, i, j);
        basis[i] = j;
        break;
      }
  }
  // Phase II objective.
  std::fill(t[m].begin(), t[m].end(), 0.0);
  for (std::size_t j = 0; j < n; ++j) t[m][j] = c[j];
  for (std::size_t i = 0; i < m; ++i) {
    if (basis[i] >= n) continue;
    const double f = t[m][basis[i]];
    if (f == 0.0) continue;
    for (std::size_t j = 0; j <= n + m; ++j) t[m][j] -= f * t[i][j];
  }
  run_simplex(t, basis, n);
  return -t[m][n + m];
}

double ot_wasserstein(std::span<const double> xs, std::span<const double> wx, std::span<const double> ys,
                      std::span<const double> wy, double p) {
  const std::size_t m = xs.size(), n = ys.size();
  std::vector<std::vector<double>> A;
  std::vector<double> b, c(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) c[i * n + j] = std::pow(std::abs(xs[i] - ys[j]), p);
  for (std::size_t i = 0; i < m; ++i) {
    std::vector<double> row(m * n, 0.0);
    for (std::size_t j = 0; j < n; ++j) row[i * n + j] = 1.0;
    A.push_back(row);
    b.push_back(wx[i]);
  }
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<double> row(m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i) row[i * n + j] = 1.0;
    A.push_back(row);
    b.push_back(wy[j]);
  }
  const double cost = simplex_min(A, b, c);
  return std::pow(std::max(0.0, cost), 1.0 / p);
}

double binomial_tail_enumeration(unsigned n, unsigned k) {
  std::uint64_t hits = 0;
  const std::uint64_t total = std::uint64_t{1} << n;
  for (std::uint64_t pattern = 0; pattern < total; ++pattern)
    if (static_cast<unsigned>(__builtin_popcountll(pattern)) >= k) ++hits;
  return static_cast<double>(hits) / static_cast<double>(total);
}

double ks_statistic_bruteforce(std::span<const double> a, std::span<const double> b) {
  auto cdf = [](std::span<const double> s, double v) {
    std::size_t c = 0;
    for (double x : s) c += x <= v ? 1 : 0;
    return static_cast<double>(c) / static_cast<double>(s.size());
  };
  double d = 0.0;
  for (auto set : {a, b})
    for (double v : set) d = std::max(d, std::abs(cdf(a, v) - cdf(b, v)));
  return d;
}

double mpc_cost_reference(const control::PredictionModel& model, std::span<const double> x0,
                          std::span<const double> d_seq, std::span<const double> u_seq, const control::MpcConfig& cfg,
                          double u_prev) {
  std::vector<double> x(x0.begin(), x0.end());
  double tracking = 0.0;
  for (std::size_t k = 0; k < cfg.prediction_horizon; ++k) {
    model.step(x, k, u_seq[k], d_seq[k]);
    const double bg = model.bg(x, k + 1);
    if (bg < cfg.target_bg) tracking += cfg.w_hypo * (cfg.target_bg - bg) * (cfg.target_bg - bg);
    if (bg > cfg.target_bg) tracking += cfg.w_hyper * (bg - cfg.target_bg) * (bg - cfg.target_bg);
  }
  double smooth = 0.0;
  double last = u_prev;
  for (std::size_t k = 0; k < cfg.control_horizon; ++k) {
    smooth += (u_seq[k] - last) * (u_seq[k] - last);
    last = u_seq[k];
  }
  return tracking + cfg.beta * smooth;
}

}  // namespace ap::testing
