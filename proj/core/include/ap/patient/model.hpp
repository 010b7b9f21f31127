#pragma once

#include <array>
#include <cstddef>
#include <string_view>

#include "ap/patient/parameters.hpp"

namespace ap::patient {

inline constexpr std::size_t kStateDim = 14;

/// Compartments of the virtual patient. Units:
///   glucose masses              mmol
///   subcutaneous insulin        mU
///   plasma insulin              mU/L
///   insulin action x1, x2       1/min
///   insulin action x3           dimensionless
///   stomach / gut glucose       mmol
///   interstitial glucose        mmol/L
enum class Compartment : std::size_t {
  kQ1,             // accessible glucose
  kQ2,             // non-accessible glucose
  kSubcutFast,     // fast absorption channel
  kSubcutSlow1,    // slow channel, first stage
  kSubcutSlow2,    // slow channel, second stage
  kPlasmaInsulin,
  kX1,             // effect on glucose transport
  kX2,             // effect on glucose disposal
  kX3,             // effect on endogenous production
  kStomachSolid,
  kStomachLiquid,
  kGut1,
  kGut2,
  kInterstitial,
};

constexpr std::size_t idx(Compartment c) noexcept { return static_cast<std::size_t>(c); }

std::string_view compartment_name(std::size_t i) noexcept;

struct PatientState {
  std::array<double, kStateDim> x{};

  double& operator[](Compartment c) noexcept { return x[idx(c)]; }
  double operator[](Compartment c) const noexcept { return x[idx(c)]; }

  bool valid() const noexcept;

  friend bool operator==(const PatientState&, const PatientState&) = default;
};

inline constexpr double kMgdlPerMmol = 18.016;
inline constexpr double kMmolPerGramGlucose = 1000.0 / 180.16;
inline constexpr double kDefaultMaxSubstep = 1.0;  // min

/// Time derivative of the state under constant insulin `u` (mU/min) and carbohydrate
/// intake `d` (g/min).
std::array<double, kStateDim> derivative(const PatientState& s, const ParamVector& p, double u,
                                         double d) noexcept;

/// Advances `dt` minutes with fixed-step RK4, substep <= max_substep.
/// Throws IntegrationError naming the first non-finite compartment.
PatientState integrate_step(const PatientState& s, const ParamVector& p, double u, double d, double dt,
                            double max_substep = kDefaultMaxSubstep);

/// Plasma glucose in mg/dL.
double bg_of_state(const PatientState& s, const ParamVector& p) noexcept;

/// Interstitial glucose in mg/dL.
double interstitial_bg(const PatientState& s) noexcept;

/// Steady-state plasma glucose (mmol/L) under constant insulin with no carbohydrate.
double steady_state_glucose(const ParamVector& p, double u);

/// Equilibrium state under constant insulin `u` and zero carbohydrate.
PatientState equilibrium(const ParamVector& p, double u);

/// Equilibrium with its glucose compartments rescaled so plasma BG is shifted by
/// `delta_bg` mg/dL; insulin and gut states stay at their steady values.
PatientState shifted_equilibrium(const ParamVector& p, double u, double delta_bg);

/// Insulin rate (mU/min) whose equilibrium has plasma glucose `target_bg` mg/dL.
/// Throws EquilibriumError when the target is outside the bisection bracket.
double basal_rate(const ParamVector& p, double target_bg);
double basal_rate(const PatientParameters& params, double target_bg);

}  // namespace ap::patient
