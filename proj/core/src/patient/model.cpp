#include "ap/patient/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ap/common/error.hpp"

namespace ap::patient {

namespace {

using Deriv = std::array<double, kStateDim>;

constexpr std::array<std::string_view, kStateDim> kNames = {
    "q1",         "q2",       "subcut_fast",   "subcut_slow1",    "subcut_slow2",
    "plasma_insulin", "x1",   "x2",            "x3",              "stomach_solid",
    "stomach_liquid", "gut1", "gut2",          "interstitial"};

double p_(const ParamVector& p, Param k) noexcept { return p[idx(k)]; }

// Insulin-independent uptake, reduced below 4.5 mmol/L.
double f01c(const ParamVector& p, double g) noexcept {
  const double f01 = p_(p, Param::kF01) * p_(p, Param::kBodyWeight);
  return g >= 4.5 ? f01 : f01 * g / 4.5;
}

double renal(const ParamVector& p, double g) noexcept {
  return g >= 9.0 ? 0.003 * (g - 9.0) * p_(p, Param::kVg) * p_(p, Param::kBodyWeight) : 0.0;
}

double egp(const ParamVector& p, double x3) noexcept {
  return std::max(0.0, p_(p, Param::kEgp0) * p_(p, Param::kBodyWeight) * (1.0 - x3));
}

}  // namespace

std::string_view compartment_name(std::size_t i) noexcept {
  return i < kStateDim ? kNames[i] : std::string_view("?");
}

bool PatientState::valid() const noexcept {
  return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v) && v >= 0.0; });
}

Deriv derivative(const PatientState& s, const ParamVector& p, double u, double d) noexcept {
  using C = Compartment;
  const double bw = p_(p, Param::kBodyWeight);
  const double vg = p_(p, Param::kVg) * bw;
  const double vi = p_(p, Param::kVi) * bw;
  const double k12 = p_(p, Param::kK12);
  const double ka1 = p_(p, Param::kKa1), ka2 = p_(p, Param::kKa2), ka3 = p_(p, Param::kKa3);
  const double ka_f = p_(p, Param::kKaFast), ka_s = p_(p, Param::kKaSlow);
  const double frac = p_(p, Param::kFastFraction);
  const double tmax_g = p_(p, Param::kTmaxG);
  const double k_grind = p_(p, Param::kKGrind), k_empty = p_(p, Param::kKEmpty);

  const double q1 = s[C::kQ1], q2 = s[C::kQ2];
  const double x1 = s[C::kX1], x2 = s[C::kX2], x3 = s[C::kX3];
  const double g = q1 / vg;
  const double ug = s[C::kGut2] / tmax_g;
  const double ui = ka_f * s[C::kSubcutFast] + ka_s * s[C::kSubcutSlow2];
  const double ins = s[C::kPlasmaInsulin];

  Deriv dx{};
  dx[idx(C::kQ1)] = -f01c(p, g) - x1 * q1 + k12 * q2 - renal(p, g) + ug + egp(p, x3);
  dx[idx(C::kQ2)] = x1 * q1 - (k12 + x2) * q2;
  dx[idx(C::kSubcutFast)] = frac * u - ka_f * s[C::kSubcutFast];
  dx[idx(C::kSubcutSlow1)] = (1.0 - frac) * u - ka_s * s[C::kSubcutSlow1];
  dx[idx(C::kSubcutSlow2)] = ka_s * (s[C::kSubcutSlow1] - s[C::kSubcutSlow2]);
  dx[idx(C::kPlasmaInsulin)] = ui / vi - p_(p, Param::kKe) * ins;
  dx[idx(C::kX1)] = ka1 * (p_(p, Param::kSit) * ins - x1);
  dx[idx(C::kX2)] = ka2 * (p_(p, Param::kSid) * ins - x2);
  dx[idx(C::kX3)] = ka3 * (p_(p, Param::kSie) * ins - x3);
  dx[idx(C::kStomachSolid)] = p_(p, Param::kAg) * d * kMmolPerGramGlucose - k_grind * s[C::kStomachSolid];
  dx[idx(C::kStomachLiquid)] = k_grind * s[C::kStomachSolid] - k_empty * s[C::kStomachLiquid];
  dx[idx(C::kGut1)] = k_empty * s[C::kStomachLiquid] - s[C::kGut1] / tmax_g;
  dx[idx(C::kGut2)] = (s[C::kGut1] - s[C::kGut2]) / tmax_g;
  dx[idx(C::kInterstitial)] = p_(p, Param::kKaInt) * (g - s[C::kInterstitial]);
  return dx;
}

PatientState integrate_step(const PatientState& s, const ParamVector& p, double u, double d, double dt,
                            double max_substep) {
  const int n = std::max(1, static_cast<int>(std::ceil(dt / max_substep - 1e-12)));
  const double h = dt / n;
  PatientState x = s;
  PatientState tmp;
  for (int step = 0; step < n; ++step) {
    const Deriv k1 = derivative(x, p, u, d);
    for (std::size_t i = 0; i < kStateDim; ++i) tmp.x[i] = x.x[i] + 0.5 * h * k1[i];
    const Deriv k2 = derivative(tmp, p, u, d);
    for (std::size_t i = 0; i < kStateDim; ++i) tmp.x[i] = x.x[i] + 0.5 * h * k2[i];
    const Deriv k3 = derivative(tmp, p, u, d);
    for (std::size_t i = 0; i < kStateDim; ++i) tmp.x[i] = x.x[i] + h * k3[i];
    const Deriv k4 = derivative(tmp, p, u, d);
    for (std::size_t i = 0; i < kStateDim; ++i) {
      const double v = x.x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      if (!std::isfinite(v)) {
        std::ostringstream os;
        os << "integration blow-up in compartment '" << compartment_name(i) << "' (value " << v << ")";
        throw IntegrationError(os.str(), std::string(compartment_name(i)));
      }
      // Round-off can push drained compartments marginally below zero.
      x.x[i] = v < 0.0 ? 0.0 : v;
    }
  }
  return x;
}

double bg_of_state(const PatientState& s, const ParamVector& p) noexcept {
  const double vg = p_(p, Param::kVg) * p_(p, Param::kBodyWeight);
  return s[Compartment::kQ1] / vg * kMgdlPerMmol;
}

double interstitial_bg(const PatientState& s) noexcept {
  return s[Compartment::kInterstitial] * kMgdlPerMmol;
}

namespace {

struct InsulinSteadyState {
  double fast, slow1, slow2, plasma, x1, x2, x3;
};

InsulinSteadyState insulin_steady_state(const ParamVector& p, double u) noexcept {
  InsulinSteadyState ss{};
  const double frac = p_(p, Param::kFastFraction);
  ss.fast = frac * u / p_(p, Param::kKaFast);
  ss.slow1 = (1.0 - frac) * u / p_(p, Param::kKaSlow);
  ss.slow2 = ss.slow1;
  ss.plasma = u / (p_(p, Param::kVi) * p_(p, Param::kBodyWeight) * p_(p, Param::kKe));
  ss.x1 = p_(p, Param::kSit) * ss.plasma;
  ss.x2 = p_(p, Param::kSid) * ss.plasma;
  ss.x3 = p_(p, Param::kSie) * ss.plasma;
  return ss;
}

// Net flux into Q1 at steady state as a function of plasma glucose; strictly decreasing.
double q1_balance(const ParamVector& p, const InsulinSteadyState& ss, double g) noexcept {
  const double vg = p_(p, Param::kVg) * p_(p, Param::kBodyWeight);
  const double k12 = p_(p, Param::kK12);
  const double q1 = g * vg;
  const double uptake = ss.x1 * ss.x2 / (k12 + ss.x2) * q1;
  return -f01c(p, g) - uptake - renal(p, g) + egp(p, ss.x3);
}

}  // namespace

double steady_state_glucose(const ParamVector& p, double u) {
  const InsulinSteadyState ss = insulin_steady_state(p, u);
  double lo = 0.0, hi = 200.0;
  if (q1_balance(p, ss, hi) > 0.0) throw EquilibriumError("steady-state glucose exceeds 200 mmol/L");
  if (q1_balance(p, ss, lo) <= 0.0) return 0.0;
  for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
    const double mid = 0.5 * (lo + hi);
    (q1_balance(p, ss, mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

PatientState equilibrium(const ParamVector& p, double u) {
  using C = Compartment;
  const InsulinSteadyState ss = insulin_steady_state(p, u);
  const double g = steady_state_glucose(p, u);
  const double vg = p_(p, Param::kVg) * p_(p, Param::kBodyWeight);
  PatientState s;
  s[C::kQ1] = g * vg;
  s[C::kQ2] = ss.x1 * s[C::kQ1] / (p_(p, Param::kK12) + ss.x2);
  s[C::kSubcutFast] = ss.fast;
  s[C::kSubcutSlow1] = ss.slow1;
  s[C::kSubcutSlow2] = ss.slow2;
  s[C::kPlasmaInsulin] = ss.plasma;
  s[C::kX1] = ss.x1;
  s[C::kX2] = ss.x2;
  s[C::kX3] = ss.x3;
  s[C::kInterstitial] = g;
  return s;
}

PatientState shifted_equilibrium(const ParamVector& p, double u, double delta_bg) {
  using C = Compartment;
  PatientState s = equilibrium(p, u);
  const double bg = bg_of_state(s, p);
  const double f = std::max(0.0, (bg + delta_bg) / bg);
  s[C::kQ1] *= f;
  s[C::kQ2] *= f;
  s[C::kInterstitial] *= f;
  return s;
}

double basal_rate(const ParamVector& p, double target_bg) {
  if (!(target_bg > 50.0 && target_bg < 300.0))
    throw EquilibriumError("target BG must lie in (50, 300) mg/dL");
  const double target = target_bg / kMgdlPerMmol;
  double lo = 0.0, hi = 1000.0;
  if (steady_state_glucose(p, lo) < target)
    throw EquilibriumError("target BG above the zero-insulin steady state");
  if (steady_state_glucose(p, hi) > target)
    throw EquilibriumError("target BG below the steady state at 1000 mU/min");
  for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
    const double mid = 0.5 * (lo + hi);
    (steady_state_glucose(p, mid) > target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double basal_rate(const PatientParameters& params, double target_bg) {
  return basal_rate(params.at(0.0), target_bg);
}

}  // namespace ap::patient
