// Copyright 2026 The vawm Authors
// SPDX-License-Identifier: Apache-2.0

#include "vawm/sim/render.hpp"

#include <algorithm>
#include <cmath>

namespace vawm::sim {

Vec2 FrameSpec::cell_to_ego(double row, double col) const {
  // Cell (r, c) spans [r, r+1) x [c, c+1); the ego is at the anchor cell centre.
  const double ar = static_cast<double>(anchor_row) + 0.5;
  const double ac = static_cast<double>(anchor_col) + 0.5;
  return {(ar - row) * meters_per_cell, (ac - col) * meters_per_cell};
}

namespace {

bool in_footprint(Footprint shape, Vec2 center, double heading, double radius, Vec2 p) {
  const Vec2 d = p - center;
  if (shape == Footprint::disc) return dot(d, d) < radius * radius;
  const double c = std::cos(heading), s = std::sin(heading);
  const double lx = c * d.x + s * d.y;
  const double ly = -s * d.x + c * d.y;
  return std::abs(lx) < radius && std::abs(ly) < radius;
}

}  // namespace

Frame render_frame(const Scenario& s, const WorldState& w, const Pose2& ego, const FrameSpec& spec) {
  Frame f;
  f.height = spec.height;
  f.width = spec.width;
  f.meters_per_cell = spec.meters_per_cell;
  f.cells.assign(spec.height * spec.width, 0.0f);
  const RenderStyle& st = s.style;
  const auto& cl = s.centerline;

  // Restrict centerline queries to segments that can reach the view.
  const double view_radius =
      std::hypot(static_cast<double>(std::max(spec.anchor_row + 1, spec.height - spec.anchor_row)),
                 static_cast<double>(std::max(spec.anchor_col + 1, spec.width - spec.anchor_col))) *
      spec.meters_per_cell;
  const Projection ego_proj = cl.project(ego.position());
  double max_hw = 0.0;
  for (double h : cl.half_width()) max_hw = std::max(max_hw, h);
  const double reach = view_radius + max_hw + ego_proj.distance + 1.0;
  const double s_lo = ego_proj.arc - reach, s_hi = ego_proj.arc + reach;
  const std::size_t first = cl.segment_at(std::max(0.0, s_lo));
  const std::size_t last = std::min(cl.segment_count(), cl.segment_at(std::min(cl.length(), s_hi)) + 1);

  const double period = st.dash_length + st.dash_gap;
  constexpr double marking_half_width = 0.25;
  const std::size_t ss = std::max<std::size_t>(1, spec.supersample);
  const double inv_samples = 1.0 / static_cast<double>(ss * ss);

  for (std::size_t r = 0; r < spec.height; ++r) {
    for (std::size_t c = 0; c < spec.width; ++c) {
      double acc = 0.0;
      for (std::size_t i = 0; i < ss; ++i) {
        for (std::size_t j = 0; j < ss; ++j) {
          const double fr = static_cast<double>(r) + (static_cast<double>(i) + 0.5) / static_cast<double>(ss);
          const double fc = static_cast<double>(c) + (static_cast<double>(j) + 0.5) / static_cast<double>(ss);
          const Vec2 p = to_world(ego, spec.cell_to_ego(fr, fc));
          float v = st.off_road;
          bool solid = false;
          for (const auto& a : w.agents) {
            if (in_footprint(st.footprint, a.pose.position(), a.pose.yaw, a.radius, p)) {
              v = st.agent;
              solid = true;
              break;
            }
          }
          if (!solid) {
            for (const auto& o : s.obstacles) {
              if (in_footprint(st.footprint, o.center, o.heading, o.radius, p)) {
                v = st.obstacle;
                solid = true;
                break;
              }
            }
          }
          if (!solid && first < last) {
            const Projection pr = cl.project(p, first, last);
            if (pr.distance <= pr.half_width) {
              v = st.drivable;
              if (std::abs(pr.lateral) <= marking_half_width && std::fmod(pr.arc, period) < st.dash_length) {
                v = st.marking;
              }
            }
          }
          acc += v;
        }
      }
      f.cells[r * spec.width + c] = static_cast<float>(std::clamp(acc * inv_samples, 0.0, 1.0));
    }
  }
  return f;
}

}  // namespace vawm::sim
