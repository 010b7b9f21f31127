#pragma once

#include "ap/common/rng.hpp"
#include "ap/patient/model.hpp"

namespace ap::patient {

struct SensorConfig {
  double noise_std = 5.0;    // mg/dL
  double cgm_period = 5.0;   // min

  void validate() const;
};

/// CGM reading: plasma BG plus N(0, noise_std) noise, clamped at zero.
double cgm_observe(const PatientState& s, const ParamVector& p, const SensorConfig& sensor, Rng& rng);

}  // namespace ap::patient
