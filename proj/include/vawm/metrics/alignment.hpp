// Copyright 2026 The vawm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "vawm/sim/geometry.hpp"

namespace vawm::metrics {

/// x -> scale * R(rotation) x + translation.
struct Similarity2D {
  double scale = 1.0;
  double rotation = 0.0;
  sim::Vec2 translation;

  sim::Vec2 apply(sim::Vec2 p) const;
};

struct Alignment {
  Similarity2D transform;
  std::vector<sim::Vec2> aligned;
  double rms = 0.0;
};

/// Least-squares similarity taking `source` onto `target` (reflections excluded).
/// Throws ContractError when the target points coincide.
Alignment umeyama_align(const std::vector<sim::Vec2>& source, const std::vector<sim::Vec2>& target);

/// Mean point-wise Euclidean distance.
double avg_l2(const std::vector<sim::Vec2>& a, const std::vector<sim::Vec2>& b);

}  // namespace vawm::metrics
