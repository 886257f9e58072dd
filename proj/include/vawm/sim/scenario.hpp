// Copyright 2026 The vawm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "vawm/sim/domain.hpp"
#include "vawm/sim/geometry.hpp"

namespace vawm::sim {

/// High-level driving command; the ids are persisted in datasets.
enum class Command : std::uint8_t { follow = 0, turn_left = 1, turn_right = 2, stop = 3 };
inline constexpr std::size_t kCommandCount = 4;

std::string_view command_name(Command c);

inline constexpr double kFrameDt = 0.5;        // 2 FPS
inline constexpr double kEgoRadius = 1.0;      // collision disc of the ego
inline constexpr std::size_t kWarmupSteps = 3; // expert steps before the first plan

struct Obstacle {
  Vec2 center;
  double radius = 1.0;
  double heading = 0.0;  // orientation of square footprints
};

/// Piecewise-linear speed profile knot.
struct SpeedKnot {
  double t = 0.0;
  double v = 0.0;
};

/// Scripted agent driving along the centerline at a fixed lateral offset.
struct Agent {
  double start_arc = 0.0;
  double lateral = 0.0;
  double radius = 1.0;
  std::vector<SpeedKnot> profile;

  double speed_at(double t) const;
  /// Distance travelled along the centerline after t seconds.
  double distance_at(double t) const;
  Pose2 initial_pose(const Centerline& cl) const { return pose_at(cl, 0.0); }
  Pose2 pose_at(const Centerline& cl, double t) const;
};

/// x, y, yaw in the world frame; vx, vy in the ego frame.
struct EgoState {
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;
  double vx = 0.0;
  double vy = 0.0;

  Pose2 pose() const { return {x, y, yaw}; }
  double speed() const;
  friend bool operator==(const EgoState&, const EgoState&) = default;
};

/// Ego state at `to` with velocity from the finite difference of two poses.
EgoState state_from_poses(const Pose2& from, const Pose2& to, double dt = kFrameDt);

struct ScenarioOptions {
  double duration = 12.0;  // closed-loop horizon after warm-up (s)
  double start_arc = 12.0;
  double stop_probability = 0.12;
  double blocking_probability = 0.2;
  double lead_agent_probability = 0.35;
  double turn_threshold = 0.35;  // rad of net heading change for a turn command
  int max_attempts = 64;
};

struct Scenario {
  std::uint64_t seed = 0;
  std::string domain;
  RenderStyle style;
  Centerline centerline;
  std::vector<Obstacle> obstacles;
  std::vector<Agent> agents;
  EgoState ego_start;
  double ego_start_arc = 0.0;
  double cruise_speed = 0.0;
  double max_speed = 0.0;  // upper end of the domain's ego speed range
  Command command = Command::follow;
  double duration = 0.0;

  /// Warm-up plus closed-loop horizon.
  double total_time() const { return static_cast<double>(kWarmupSteps) * kFrameDt + duration; }
  /// Number of frames from t = 0 to total_time() inclusive.
  std::size_t frame_count() const;
};

/// Deterministic in (domain, seed); rejection-resamples until the scenario
/// invariants hold and throws after `max_attempts` failures.
Scenario sample_scenario(const DomainSpec& domain, std::uint64_t seed, const ScenarioOptions& options = {});

/// Empty straight corridor, handy for constructed tests.
Scenario straight_scenario(double length, double half_width, double speed, Command command = Command::follow);

/// Empty string when the invariants hold, otherwise a description.
std::string check_scenario(const Scenario& s);

}  // namespace vawm::sim
