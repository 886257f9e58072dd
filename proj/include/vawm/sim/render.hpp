// Copyright 2026 The vawm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "vawm/sim/world.hpp"

namespace vawm::sim {

/// Ego-centric raster layout. The ego sits at the centre of cell
/// (anchor_row, anchor_col) with its heading pointing up (decreasing row).
struct FrameSpec {
  std::size_t height = 32;
  std::size_t width = 32;
  double meters_per_cell = 0.5;
  std::size_t anchor_row = 24;
  std::size_t anchor_col = 16;
  std::size_t supersample = 2;  // per axis

  /// Ego-frame coordinates of a point given in fractional cell units.
  Vec2 cell_to_ego(double row, double col) const;
};

/// Occupancy image with values in [0, 1].
struct Frame {
  std::size_t height = 0;
  std::size_t width = 0;
  double meters_per_cell = 0.5;
  std::vector<float> cells;

  float at(std::size_t r, std::size_t c) const { return cells[r * width + c]; }
  friend bool operator==(const Frame&, const Frame&) = default;
};

Frame render_frame(const Scenario& s, const WorldState& w, const Pose2& ego, const FrameSpec& spec = {});

}  // namespace vawm::sim
