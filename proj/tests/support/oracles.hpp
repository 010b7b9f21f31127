#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ap/control/mpc.hpp"

namespace ap::testing {

/// Dense two-phase simplex for  min c^T x  s.t.  A x = b, x >= 0  (b >= 0).
/// Returns the optimal value; throws if infeasible or unbounded.
double simplex_min(const std::vector<std::vector<double>>& A, const std::vector<double>& b,
                   const std::vector<double>& c);

/// Optimal transport between two discrete distributions with cost |x - y|^p,
/// solved as a transportation LP; returns (min cost)^(1/p).
double ot_wasserstein(std::span<const double> xs, std::span<const double> wx, std::span<const double> ys,
                      std::span<const double> wy, double p);

/// P(#positive >= k) under fair coin flips by enumerating all 2^n sign patterns.
double binomial_tail_enumeration(unsigned n, unsigned k);

/// Sup-distance of two empirical CDFs evaluated at every sample point, O(n^2).
double ks_statistic_bruteforce(std::span<const double> a, std::span<const double> b);

/// MPC cost written out term by term: rollout, asymmetric quadratic, increments.
double mpc_cost_reference(const control::PredictionModel& model, std::span<const double> x0,
                          std::span<const double> d_seq, std::span<const double> u_seq, const control::MpcConfig& cfg,
                          double u_prev);

}  // namespace ap::testing
