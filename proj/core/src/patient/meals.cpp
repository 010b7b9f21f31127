#include "ap/patient/meals.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ap/common/error.hpp"

#ifndef AP_DEFAULT_DATA_DIR
#define AP_DEFAULT_DATA_DIR "data"
#endif

namespace ap::patient {

using nlohmann::json;

double DisturbanceTrace::total() const noexcept {
  return std::accumulate(carbs.begin(), carbs.end(), 0.0);
}

void MealDistributionSpec::validate() const {
  if (!(ingestion_minutes > 0.0)) throw ConfigError("meal spec '" + name + "': ingestion_minutes must be > 0");
  for (const auto& s : slots) {
    const std::string where = "meal spec '" + name + "', slot '" + s.name + "': ";
    if (!(s.probability_pct >= 0.0 && s.probability_pct <= 100.0))
      throw ConfigError(where + "probability must lie in [0, 100]");
    if (!(s.carbs_lo >= 0.0 && s.carbs_lo <= s.carbs_hi))
      throw ConfigError(where + "carbohydrate interval must be nonempty and nonnegative");
    if (!(s.start_lo_h >= 0.0 && s.start_lo_h < s.start_hi_h && s.start_hi_h <= 24.0))
      throw ConfigError(where + "start window must be nonempty and inside [0, 24)");
  }
  std::vector<const MealSlot*> sorted;
  for (const auto& s : slots) sorted.push_back(&s);
  std::sort(sorted.begin(), sorted.end(),
            [](const MealSlot* a, const MealSlot* b) { return a->start_lo_h < b->start_lo_h; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i]->start_lo_h < sorted[i - 1]->start_hi_h)
      throw ConfigError("meal spec '" + name + "': windows of '" + sorted[i - 1]->name + "' and '" +
                        sorted[i]->name + "' overlap");
  }
}

namespace {

// Adds `grams` spread uniformly over [start, start + duration) minutes into step bins.
void deposit(std::vector<double>& bins, double step_minutes, double start, double duration, double grams) {
  const double rate = grams / duration;
  const double end = start + duration;
  auto k = static_cast<std::size_t>(std::floor(start / step_minutes));
  for (; k < bins.size(); ++k) {
    const double lo = std::max(start, static_cast<double>(k) * step_minutes);
    const double hi = std::min(end, static_cast<double>(k + 1) * step_minutes);
    if (hi <= lo) break;
    bins[k] += rate * (hi - lo);
  }
}

}  // namespace

DisturbanceTrace sample_meal_schedule(const MealDistributionSpec& spec, std::size_t steps, Rng& rng,
                                      double step_minutes) {
  spec.validate();
  if (steps == 0) throw ConfigError("sample_meal_schedule: steps must be >= 1");
  DisturbanceTrace trace;
  trace.step_minutes = step_minutes;
  trace.carbs.assign(steps, 0.0);
  const double horizon = static_cast<double>(steps) * step_minutes;
  const auto days = static_cast<std::size_t>(std::ceil(horizon / 1440.0));
  for (std::size_t day = 0; day < days; ++day) {
    for (const auto& slot : spec.slots) {
      // Draws are made unconditionally so that slot outcomes do not shift the stream.
      const double occur = uniform(rng, 0.0, 100.0);
      const double grams = uniform(rng, slot.carbs_lo, slot.carbs_hi);
      const double start_h = uniform(rng, slot.start_lo_h, slot.start_hi_h);
      if (!(occur < slot.probability_pct)) continue;
      const double start = static_cast<double>(day) * 1440.0 + start_h * 60.0;
      deposit(trace.carbs, step_minutes, start, spec.ingestion_minutes, grams);
    }
  }
  return trace;
}

MealDistributionSpec parse_meal_spec(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("meal spec: malformed JSON: ") + e.what());
  }
  MealDistributionSpec spec;
  try {
    spec.name = j.value("name", std::string("custom"));
    spec.ingestion_minutes = j.value("ingestion_minutes", 15.0);
    for (const auto& s : j.at("slots")) {
      MealSlot slot;
      slot.name = s.at("name").get<std::string>();
      slot.probability_pct = s.at("probability_pct").get<double>();
      const auto carbs = s.at("carbs_g").get<std::array<double, 2>>();
      const auto start = s.at("start_h").get<std::array<double, 2>>();
      slot.carbs_lo = carbs[0];
      slot.carbs_hi = carbs[1];
      slot.start_lo_h = start[0];
      slot.start_hi_h = start[1];
      spec.slots.push_back(std::move(slot));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("meal spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

MealDistributionSpec load_meal_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open meal spec '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_meal_spec(ss.str());
}

std::filesystem::path data_dir() {
  if (const char* env = std::getenv("AP_DATA_DIR"); env && *env) return env;
  return AP_DEFAULT_DATA_DIR;
}

MealDistributionSpec resolve_meal_spec(const std::string& name_or_path) {
  if (name_or_path == "training" || name_or_path == "unseen")
    return load_meal_spec(data_dir() / "meals" / (name_or_path + ".json"));
  return load_meal_spec(name_or_path);
}

void write_trace_csv(std::ostream& os, const DisturbanceTrace& trace) {
  os << "t_min,carbs_g\n";
  for (std::size_t k = 0; k < trace.size(); ++k)
    os << static_cast<double>(k) * trace.step_minutes << ',' << trace.carbs[k] << '\n';
}

}  // namespace ap::patient
