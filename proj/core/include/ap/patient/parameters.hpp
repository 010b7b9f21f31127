#pragma once

#include <array>
#include <cstddef>
#include <string_view>

#include "ap/common/rng.hpp"

namespace ap::patient {

/// Model constants of the 14-compartment glucose-insulin model.
/// Two-compartment glucose kinetics with three remote insulin actions. The
/// subcutaneous insulin absorption is split into a fast and a two-stage slow
/// channel, and carbohydrate passes a two-stage stomach before the gut.
enum class Param : std::size_t {
  kBodyWeight,    // kg
  kK12,           // 1/min, transfer Q2 -> Q1
  kKa1,           // 1/min, deactivation of insulin action x1
  kKa2,           // 1/min, deactivation of x2
  kKa3,           // 1/min, deactivation of x3
  kSit,           // 1/min per mU/L, insulin sensitivity of transport
  kSid,           // 1/min per mU/L, insulin sensitivity of disposal
  kSie,           // 1 per mU/L, insulin sensitivity of endogenous production
  kKe,            // 1/min, plasma insulin elimination
  kVi,            // L/kg, insulin distribution volume
  kVg,            // L/kg, glucose distribution volume
  kF01,           // mmol/kg/min, non-insulin-dependent glucose flux
  kEgp0,          // mmol/kg/min, endogenous glucose production at zero insulin
  kKaFast,        // 1/min, fast subcutaneous absorption channel
  kKaSlow,        // 1/min, per-stage rate of the slow channel
  kFastFraction,  // fraction of infused insulin taking the fast channel
  kKGrind,        // 1/min, solid -> liquid stomach
  kKEmpty,        // 1/min, stomach -> gut
  kTmaxG,         // min, gut absorption time constant
  kAg,            // carbohydrate bioavailability
  kKaInt,         // 1/min, plasma -> interstitial equilibration
  kCount
};

inline constexpr std::size_t kParamCount = static_cast<std::size_t>(Param::kCount);

using ParamVector = std::array<double, kParamCount>;

constexpr std::size_t idx(Param p) noexcept { return static_cast<std::size_t>(p); }

std::string_view param_name(Param p) noexcept;

/// Population nominal values.
ParamVector nominal_parameters() noexcept;

/// Parameters that take part in intra- and inter-patient variation. Body
/// weight, distribution volume of glucose and the structural fractions stay fixed.
bool is_variable(Param p) noexcept;

enum class PatientConfig { kFixed, kVarying, kCohort };

std::string_view to_string(PatientConfig c) noexcept;
PatientConfig patient_config_from_string(std::string_view s);

struct VariationDefaults {
  double intra_amplitude = 0.10;  // fraction of nominal
  double inter_cov = 0.15;        // coefficient of variation of the log-normal factor
  double inter_min = 0.6;
  double inter_max = 1.6;
};

/// Time-indexed parameter distribution: lambda_i(t) = nominal_i * inter_i *
/// (1 + a_i * sin(2*pi*t/1440 + phi_i)).
struct PatientParameters {
  ParamVector nominal = nominal_parameters();
  ParamVector intra_amplitude{};   // fraction of nominal
  ParamVector intra_phase_hours{};
  ParamVector inter_scale = unit_scale();

  static ParamVector unit_scale() noexcept {
    ParamVector s;
    s.fill(1.0);
    return s;
  }

  /// Parameter vector at absolute simulation time `t_min` (minutes since midnight of day 0).
  ParamVector at(double t_min) const noexcept;

  bool time_constant() const noexcept;

  /// Throws ConfigError when any evaluated parameter could become non-positive.
  void validate() const;
};

PatientParameters sample_patient_params(PatientConfig config, const PatientParameters& base, Rng& rng,
                                        const VariationDefaults& defaults = {});

}  // namespace ap::patient
