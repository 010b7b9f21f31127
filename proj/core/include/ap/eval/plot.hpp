#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ap/eval/rollout.hpp"

namespace ap::eval {

struct ProfileGroup {
  std::string label;
  std::vector<RolloutRecord> records;  // equal lengths
};

/// Writes `<stem>.dat` (time, then mean and mean +- std of BG per group) and a
/// gnuplot script `<stem>.gp` drawing the bands with the 70/180 mg/dL limits.
void write_bg_profile_plot(const std::filesystem::path& dir, const std::string& stem,
                           const std::vector<ProfileGroup>& groups);

}  // namespace ap::eval
