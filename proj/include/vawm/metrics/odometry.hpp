// Copyright 2026 The vawm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "vawm/sim/render.hpp"

namespace vawm::metrics {

struct OdometryGrid {
  double max_shift = 2.0;   // m
  double shift_step = 0.25; // m
  double max_yaw_deg = 30.0;
  double yaw_step_deg = 2.5;
  double tie_tolerance = 1e-9;
  double min_overlap = 0.25;  // fraction of cells that must sample inside the previous frame
};

/// Ego motion between two frames, in the ego frame of the first.
struct RelativePose {
  double dx = 0.0;
  double dy = 0.0;
  double dyaw = 0.0;
};

/// Exhaustive registration: the candidate motion maximising the normalised
/// cross-correlation of `next` against `prev` warped by that motion. Ties
/// (within tolerance) go to the smallest motion.
RelativePose register_pair(const sim::Frame& prev, const sim::Frame& next, const sim::FrameSpec& spec = {},
                           const OdometryGrid& grid = {});

std::vector<RelativePose> estimate_odometry(const std::vector<sim::Frame>& frames, const sim::FrameSpec& spec = {},
                                            const OdometryGrid& grid = {});

/// Positions of the chained motions, starting with the origin.
std::vector<sim::Vec2> chain_trajectory(const std::vector<RelativePose>& motions);

}  // namespace vawm::metrics
