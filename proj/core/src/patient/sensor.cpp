#include "ap/patient/sensor.hpp"

#include <algorithm>
#include <cmath>

#include "ap/common/error.hpp"

namespace ap::patient {

void SensorConfig::validate() const {
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) throw ConfigError("sensor noise_std must be >= 0");
  if (!(cgm_period > 0.0)) throw ConfigError("sensor cgm_period must be > 0");
}

double cgm_observe(const PatientState& s, const ParamVector& p, const SensorConfig& sensor, Rng& rng) {
  const double bg = bg_of_state(s, p);
  if (sensor.noise_std == 0.0) return std::max(0.0, bg);
  return std::max(0.0, bg + sensor.noise_std * standard_normal(rng));
}

}  // namespace ap::patient
