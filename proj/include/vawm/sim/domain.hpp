// Copyright 2026 The vawm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>

namespace vawm::sim {

struct Range {
  double lo = 0.0;
  double hi = 0.0;

  bool valid() const { return lo <= hi; }
  bool contains(double v) const { return v >= lo && v <= hi; }
};

enum class Footprint { disc, square };

/// How world geometry maps to occupancy intensities.
struct RenderStyle {
  int id = 0;
  float off_road = 0.0f;
  float drivable = 0.35f;
  float marking = 0.65f;
  float obstacle = 1.0f;
  float agent = 0.8f;
  Footprint footprint = Footprint::disc;
  double dash_length = 3.0;  // centerline marking dash (m)
  double dash_gap = 3.0;
};

/// Statistics of a family of synthetic scenarios.
struct DomainSpec {
  std::string name;
  Range half_width;          // corridor half-width (m)
  double obstacle_density;   // static obstacles per 100 m of centerline
  Range agent_speed;         // m/s
  Range curvature;           // 1/m
  Range ego_speed;           // cruise speed of the ego (m/s)
  RenderStyle style;
  std::string rng_label;

  void validate() const;  // throws ParameterError
};

/// Training domain.
DomainSpec domain_a();
/// Shifted domain used only for zero-shot evaluation.
DomainSpec domain_b();
/// "A" or "B".
DomainSpec domain_by_name(std::string_view name);

}  // namespace vawm::sim
