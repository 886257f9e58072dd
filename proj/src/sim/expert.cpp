// Copyright 2026 The vawm Authors
// SPDX-License-Identifier: Apache-2.0

#include "vawm/sim/expert.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vawm/error.hpp"

namespace vawm::sim {
namespace {

struct Blocker {
  double arc;
  double lateral;
  double radius;
  const Agent* agent;  // null for static obstacles
};

std::vector<Blocker> collect_blockers(const Scenario& s, const ExpertConfig& cfg) {
  std::vector<Blocker> out;
  for (const auto& o : s.obstacles) {
    const Projection p = s.centerline.project(o.center);
    if (std::abs(p.lateral) < o.radius + kEgoRadius + cfg.block_margin) out.push_back({p.arc, p.lateral, o.radius, nullptr});
  }
  for (const auto& a : s.agents) {
    if (std::abs(a.lateral) < a.radius + kEgoRadius + cfg.block_margin) out.push_back({a.start_arc, a.lateral, a.radius, &a});
  }
  return out;
}

// Highest speed from which the ego can still settle behind every blocker.
double safe_speed(const Scenario& s, const std::vector<Blocker>& blockers, double ego_arc, double t,
                  const ExpertConfig& cfg) {
  double v_safe = std::numeric_limits<double>::infinity();
  for (const auto& b : blockers) {
    double arc = b.arc;
    double v_lead = 0.0;
    if (b.agent != nullptr) {
      arc = std::min(b.agent->start_arc + b.agent->distance_at(t), s.centerline.length());
      v_lead = b.agent->speed_at(t);
    }
    const double gap = arc - ego_arc - b.radius - kEgoRadius;
    if (gap < -2.0 * (b.radius + kEgoRadius)) continue;  // already passed
    const double free = std::max(0.0, gap - cfg.standoff);
    v_safe = std::min(v_safe, std::sqrt(v_lead * v_lead + 2.0 * cfg.comfort_decel * free));
  }
  return v_safe;
}

}  // namespace

std::vector<Pose2> expert_policy(const Scenario& s, const WorldState& w, const EgoState& ego, std::size_t horizon,
                                 const ExpertConfig& cfg) {
  const auto& cl = s.centerline;
  const Projection start = cl.project({ego.x, ego.y});
  if (start.distance > start.half_width) throw PolicyError("expert_policy: ego is outside the corridor");

  const std::vector<Blocker> blockers = collect_blockers(s, cfg);
  Pose2 pose = ego.pose();
  double v = std::max(0.0, ego.vx);
  double arc = start.arc;
  double t = w.time;
  const int subs_per_frame = static_cast<int>(std::lround(kFrameDt / cfg.substep));
  std::vector<Pose2> out;
  out.reserve(horizon);
  for (std::size_t k = 0; k < horizon; ++k) {
    for (int i = 0; i < subs_per_frame; ++i) {
      double v_des;
      if (s.command == Command::stop) {
        v_des = std::max(0.0, v - cfg.stop_decel * cfg.substep);
      } else {
        v_des = std::min(s.cruise_speed, safe_speed(s, blockers, arc, t, cfg));
      }
      const double v_next = std::clamp(v_des, std::max(0.0, v - cfg.max_decel * cfg.substep), v + cfg.accel * cfg.substep);
      const double v_mid = 0.5 * (v + v_next);
      // Pure pursuit towards the centerline point one lookahead ahead.
      const double lookahead = std::max(cfg.lookahead_min, cfg.lookahead_gain * v);
      const Vec2 target = cl.point_at(std::min(arc + lookahead, cl.length()));
      const Vec2 local = to_local(pose, target);
      const double l2 = std::max(dot(local, local), 1e-9);
      const double kappa = 2.0 * local.y / l2;
      const double ds = v_mid * cfg.substep;
      const double mid_yaw = pose.yaw + 0.5 * kappa * ds;
      pose.x += ds * std::cos(mid_yaw);
      pose.y += ds * std::sin(mid_yaw);
      pose.yaw = wrap_angle(pose.yaw + kappa * ds);
      v = v_next;
      t += cfg.substep;
      const std::size_t seg = cl.segment_at(arc);
      const std::size_t first = seg > 8 ? seg - 8 : 0;
      arc = cl.project(pose.position(), first, seg + 9).arc;
    }
    out.push_back(relative(ego.pose(), pose));
  }
  return out;
}

}  // namespace vawm::sim
