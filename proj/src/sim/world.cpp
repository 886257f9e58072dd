// Copyright 2026 The vawm Authors
// SPDX-License-Identifier: Apache-2.0

#include "vawm/sim/world.hpp"

#include <cmath>

#include "vawm/error.hpp"

namespace vawm::sim {

std::vector<AgentState> agents_at(const Scenario& s, double t) {
  std::vector<AgentState> out;
  out.reserve(s.agents.size());
  for (const auto& a : s.agents) out.push_back({a.pose_at(s.centerline, t), a.radius, a.speed_at(t)});
  return out;
}

bool collides(const Scenario& s, const std::vector<AgentState>& agents, Vec2 ego) {
  for (const auto& o : s.obstacles) {
    if (norm(ego - o.center) < kEgoRadius + o.radius) return true;
  }
  for (const auto& a : agents) {
    if (norm(ego - a.pose.position()) < kEgoRadius + a.radius) return true;
  }
  return false;
}

bool inside_corridor(const Scenario& s, Vec2 ego) {
  const Projection p = s.centerline.project(ego);
  return p.distance <= p.half_width;
}

WorldState initial_world(const Scenario& s) {
  WorldState w;
  w.time = 0.0;
  w.agents = agents_at(s, 0.0);
  w.ego = s.ego_start.pose();
  w.collision = collides(s, w.agents, w.ego.position());
  w.off_corridor = !inside_corridor(s, w.ego.position());
  return w;
}

WorldState step_world(const Scenario& s, const WorldState& w, const Pose2& new_ego, double dt) {
  if (std::abs(dt - kFrameDt) > 1e-12) throw ParameterError("step_world: dt must be one frame period (0.5 s)");
  WorldState next;
  next.time = w.time + dt;
  next.agents = agents_at(s, next.time);
  next.ego = {new_ego.x, new_ego.y, wrap_angle(new_ego.yaw)};
  next.collision = collides(s, next.agents, next.ego.position());
  next.off_corridor = !inside_corridor(s, next.ego.position());
  return next;
}

}  // namespace vawm::sim
