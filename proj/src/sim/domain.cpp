// Copyright 2026 The vawm Authors
// SPDX-License-Identifier: Apache-2.0

#include "vawm/sim/domain.hpp"

#include "vawm/error.hpp"

namespace vawm::sim {

void DomainSpec::validate() const {
  if (!half_width.valid() || !agent_speed.valid() || !curvature.valid() || !ego_speed.valid()) {
    throw ParameterError("domain '" + name + "': empty range");
  }
  if (obstacle_density < 0) throw ParameterError("domain '" + name + "': negative obstacle density");
  if (half_width.lo <= 0 || ego_speed.lo < 0 || agent_speed.lo < 0) {
    throw ParameterError("domain '" + name + "': widths and speeds must be positive");
  }
  if (style.dash_length <= 0 || style.dash_gap <= 0) throw ParameterError("domain '" + name + "': bad dash pattern");
}

DomainSpec domain_a() {
  DomainSpec d;
  d.name = "A";
  d.half_width = {2.5, 3.5};
  d.obstacle_density = 3.0;
  d.agent_speed = {1.0, 2.5};
  d.curvature = {-0.04, 0.04};
  d.ego_speed = {2.5, 3.5};
  d.style = RenderStyle{0, 0.0f, 0.35f, 0.65f, 1.0f, 0.8f, Footprint::disc, 3.0, 3.0};
  d.rng_label = "domain-A";
  return d;
}

DomainSpec domain_b() {
  DomainSpec d;
  d.name = "B";
  d.half_width = {2.2, 3.0};
  d.obstacle_density = 5.0;
  d.agent_speed = {1.5, 3.0};
  d.curvature = {-0.06, 0.06};
  d.ego_speed = {2.5, 3.5};
  d.style = RenderStyle{1, 0.1f, 0.45f, 0.75f, 0.9f, 0.95f, Footprint::square, 2.0, 3.0};
  d.rng_label = "domain-B";
  return d;
}

DomainSpec domain_by_name(std::string_view name) {
  if (name == "A" || name == "a") return domain_a();
  if (name == "B" || name == "b") return domain_b();
  throw ParameterError("unknown domain '" + std::string(name) + "' (expected A or B)");
}

}  // namespace vawm::sim
