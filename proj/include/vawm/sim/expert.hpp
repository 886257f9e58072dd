// Copyright 2026 The vawm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "vawm/sim/world.hpp"

namespace vawm::sim {

struct ExpertConfig {
  double substep = 0.05;
  double accel = 1.0;          // m/s^2 towards cruise speed
  double comfort_decel = 1.5;  // shapes the safe-speed curve
  double max_decel = 3.0;
  double stop_decel = 1.5;     // under the STOP command
  double standoff = 2.0;       // edge-to-edge gap kept to blockers (m)
  double block_margin = 0.5;   // lateral clearance below which an object blocks
  double lookahead_min = 4.0;
  double lookahead_gain = 1.5;  // s
};

/// Pure-pursuit driver along the centerline with privileged knowledge of
/// the scripted agents. Returns `horizon` waypoints (x, y, yaw) at 0.5 s
/// spacing in the ego frame. Throws PolicyError when the ego is outside
/// the corridor.
std::vector<Pose2> expert_policy(const Scenario& s, const WorldState& w, const EgoState& ego,
                                 std::size_t horizon = 8, const ExpertConfig& config = {});

}  // namespace vawm::sim
