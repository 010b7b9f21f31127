#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "ap/common/rng.hpp"

namespace ap::patient {

struct MealSlot {
  std::string name;
  double probability_pct = 0.0;  // [0, 100]
  double carbs_lo = 0.0;         // g
  double carbs_hi = 0.0;
  double start_lo_h = 0.0;       // hour of day, window [lo, hi)
  double start_hi_h = 0.0;
};

struct MealDistributionSpec {
  std::string name;
  std::vector<MealSlot> slots;
  double ingestion_minutes = 15.0;

  /// Throws ConfigError on probability / interval / window violations.
  void validate() const;
};

/// Carbohydrate per control step (grams), one entry per step.
struct DisturbanceTrace {
  double step_minutes = 5.0;
  std::vector<double> carbs;

  std::size_t size() const noexcept { return carbs.size(); }
  double operator[](std::size_t k) const noexcept { return k < carbs.size() ? carbs[k] : 0.0; }
  /// Intake rate during step k in g/min.
  double rate(std::size_t k) const noexcept { return (*this)[k] / step_minutes; }
  double total() const noexcept;
};

/// Samples a multi-day schedule covering `steps` control steps. Each day every slot
/// occurs with its probability; amount and start time are uniform on their intervals.
/// Carbohydrate is spread at a constant rate over `ingestion_minutes`.
DisturbanceTrace sample_meal_schedule(const MealDistributionSpec& spec, std::size_t steps, Rng& rng,
                                      double step_minutes = 5.0);

MealDistributionSpec parse_meal_spec(const std::string& json_text);
MealDistributionSpec load_meal_spec(const std::filesystem::path& path);

/// Resolves "training" / "unseen" to the bundled data files, anything else to a path.
MealDistributionSpec resolve_meal_spec(const std::string& name_or_path);

std::filesystem::path data_dir();

/// CSV with header `t_min,carbs_g`.
void write_trace_csv(std::ostream& os, const DisturbanceTrace& trace);

}  // namespace ap::patient
