#include "ap/patient/parameters.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "ap/common/error.hpp"

namespace ap::patient {

std::string_view param_name(Param p) noexcept {
  switch (p) {
    case Param::kBodyWeight: return "body_weight";
    case Param::kK12: return "k12";
    case Param::kKa1: return "ka1";
    case Param::kKa2: return "ka2";
    case Param::kKa3: return "ka3";
    case Param::kSit: return "si_transport";
    case Param::kSid: return "si_disposal";
    case Param::kSie: return "si_egp";
    case Param::kKe: return "ke";
    case Param::kVi: return "vi";
    case Param::kVg: return "vg";
    case Param::kF01: return "f01";
    case Param::kEgp0: return "egp0";
    case Param::kKaFast: return "ka_fast";
    case Param::kKaSlow: return "ka_slow";
    case Param::kFastFraction: return "fast_fraction";
    case Param::kKGrind: return "k_grind";
    case Param::kKEmpty: return "k_empty";
    case Param::kTmaxG: return "tmax_g";
    case Param::kAg: return "ag";
    case Param::kKaInt: return "ka_int";
    case Param::kCount: break;
  }
  return "?";
}

ParamVector nominal_parameters() noexcept {
  ParamVector p{};
  p[idx(Param::kBodyWeight)] = 70.0;
  p[idx(Param::kK12)] = 0.066;
  p[idx(Param::kKa1)] = 0.006;
  p[idx(Param::kKa2)] = 0.06;
  p[idx(Param::kKa3)] = 0.03;
  p[idx(Param::kSit)] = 51.2e-4;
  p[idx(Param::kSid)] = 8.2e-4;
  p[idx(Param::kSie)] = 520e-4;
  p[idx(Param::kKe)] = 0.138;
  p[idx(Param::kVi)] = 0.12;
  p[idx(Param::kVg)] = 0.16;
  p[idx(Param::kF01)] = 0.0097;
  p[idx(Param::kEgp0)] = 0.0161;
  // Fast channel ~ one stage of the two-stage tmax_I = 55 min absorption;
  // slow channel two stages of 70 min.
  p[idx(Param::kKaFast)] = 1.0 / 55.0;
  p[idx(Param::kKaSlow)] = 1.0 / 70.0;
  p[idx(Param::kFastFraction)] = 0.67;
  p[idx(Param::kKGrind)] = 0.2;
  p[idx(Param::kKEmpty)] = 0.15;
  p[idx(Param::kTmaxG)] = 40.0;
  p[idx(Param::kAg)] = 0.8;
  p[idx(Param::kKaInt)] = 0.073;
  return p;
}

bool is_variable(Param p) noexcept {
  switch (p) {
    case Param::kK12:
    case Param::kKa1:
    case Param::kKa2:
    case Param::kKa3:
    case Param::kSit:
    case Param::kSid:
    case Param::kSie:
    case Param::kKe:
    case Param::kVi:
    case Param::kF01:
    case Param::kEgp0:
    case Param::kKaFast:
    case Param::kKaSlow:
    case Param::kTmaxG:
      return true;
    default:
      return false;
  }
}

std::string_view to_string(PatientConfig c) noexcept {
  switch (c) {
    case PatientConfig::kFixed: return "fixed";
    case PatientConfig::kVarying: return "varying";
    case PatientConfig::kCohort: return "cohort";
  }
  return "?";
}

PatientConfig patient_config_from_string(std::string_view s) {
  if (s == "fixed") return PatientConfig::kFixed;
  if (s == "varying") return PatientConfig::kVarying;
  if (s == "cohort") return PatientConfig::kCohort;
  throw ConfigError("unknown patient config '" + std::string(s) + "' (expected fixed|varying|cohort)");
}

ParamVector PatientParameters::at(double t_min) const noexcept {
  ParamVector out;
  const double w = 2.0 * std::numbers::pi / 1440.0;
  for (std::size_t i = 0; i < kParamCount; ++i) {
    double v = nominal[i] * inter_scale[i];
    if (intra_amplitude[i] != 0.0) {
      const double phase = 2.0 * std::numbers::pi * intra_phase_hours[i] / 24.0;
      v *= 1.0 + intra_amplitude[i] * std::sin(w * t_min + phase);
    }
    out[i] = v;
  }
  return out;
}

bool PatientParameters::time_constant() const noexcept {
  for (double a : intra_amplitude)
    if (a != 0.0) return false;
  return true;
}

void PatientParameters::validate() const {
  for (std::size_t i = 0; i < kParamCount; ++i) {
    const auto name = std::string(param_name(static_cast<Param>(i)));
    if (!(nominal[i] > 0.0) || !std::isfinite(nominal[i]))
      throw ConfigError("parameter '" + name + "' must be positive");
    if (!(inter_scale[i] > 0.0) || !std::isfinite(inter_scale[i]))
      throw ConfigError("inter_scale of '" + name + "' must be positive");
    if (!(intra_amplitude[i] >= 0.0 && intra_amplitude[i] < 1.0))
      throw ConfigError("intra amplitude of '" + name + "' must lie in [0, 1)");
  }
}

PatientParameters sample_patient_params(PatientConfig config, const PatientParameters& base, Rng& rng,
                                        const VariationDefaults& defaults) {
  PatientParameters out = base;
  out.intra_amplitude.fill(0.0);
  out.intra_phase_hours.fill(0.0);
  if (config == PatientConfig::kFixed) return out;

  for (std::size_t i = 0; i < kParamCount; ++i) {
    if (!is_variable(static_cast<Param>(i))) continue;
    out.intra_amplitude[i] = defaults.intra_amplitude;
    out.intra_phase_hours[i] = uniform(rng, 0.0, 24.0);
  }
  if (config == PatientConfig::kVarying) return out;

  // Median-one log-normal factor; sigma from the requested coefficient of variation.
  const double sigma = std::sqrt(std::log1p(defaults.inter_cov * defaults.inter_cov));
  for (std::size_t i = 0; i < kParamCount; ++i) {
    if (!is_variable(static_cast<Param>(i))) continue;
    double f = 0.0;
    do {
      f = std::exp(sigma * standard_normal(rng));
    } while (f < defaults.inter_min || f > defaults.inter_max);
    out.inter_scale[i] = base.inter_scale[i] * f;
  }
  return out;
}

}  // namespace ap::patient
