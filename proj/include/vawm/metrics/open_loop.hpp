// Copyright 2026 The vawm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <vector>

#include "vawm/sim/world.hpp"

namespace vawm::metrics {

/// One prediction/ground-truth pair of ego-frame action chunks.
struct OpenLoopSample {
  const sim::Scenario* scenario = nullptr;
  double time = 0.0;    // planning time
  sim::Pose2 origin;    // world pose at planning time
  std::vector<sim::Pose2> predicted;
  std::vector<sim::Pose2> ground_truth;
};

inline constexpr std::array<std::size_t, 3> kHorizonSteps{2, 4, 6};  // 1 s, 2 s, 3 s

struct OpenLoopReport {
  std::array<double, 3> l2{};
  std::array<double, 3> collision_rate{};
  double l2_avg = 0.0;
  double collision_avg = 0.0;
  std::size_t samples = 0;
};

OpenLoopReport open_loop_metrics(const std::vector<OpenLoopSample>& samples);

}  // namespace vawm::metrics
