// Copyright 2026 The vawm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "vawm/sim/scenario.hpp"

namespace vawm::sim {

struct AgentState {
  Pose2 pose;
  double radius = 1.0;
  double speed = 0.0;
};

struct WorldState {
  double time = 0.0;
  std::vector<AgentState> agents;
  Pose2 ego;
  bool collision = false;
  bool off_corridor = false;
};

std::vector<AgentState> agents_at(const Scenario& s, double t);
WorldState initial_world(const Scenario& s);

/// Advance scripted agents by dt, place the ego at `new_ego`, and flag
/// collisions and corridor departures. dt must equal the frame period.
WorldState step_world(const Scenario& s, const WorldState& w, const Pose2& new_ego, double dt = kFrameDt);

/// Strict overlap of the ego disc at `ego` with an obstacle or agent disc.
bool collides(const Scenario& s, const std::vector<AgentState>& agents, Vec2 ego);
/// Centre within the corridor; the boundary counts as inside.
bool inside_corridor(const Scenario& s, Vec2 ego);

}  // namespace vawm::sim
