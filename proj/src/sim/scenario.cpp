// Copyright 2026 The vawm Authors
// SPDX-License-Identifier: Apache-2.0

#include "vawm/sim/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "vawm/error.hpp"
#include "vawm/rng.hpp"

namespace vawm::sim {

std::string_view command_name(Command c) {
  switch (c) {
    case Command::follow: return "FOLLOW";
    case Command::turn_left: return "TURN_LEFT";
    case Command::turn_right: return "TURN_RIGHT";
    case Command::stop: return "STOP";
  }
  return "?";
}

double Agent::speed_at(double t) const {
  if (profile.empty()) return 0.0;
  if (t <= profile.front().t) return profile.front().v;
  for (std::size_t i = 1; i < profile.size(); ++i) {
    if (t <= profile[i].t) {
      const auto& a = profile[i - 1];
      const auto& b = profile[i];
      const double u = (t - a.t) / (b.t - a.t);
      return a.v + u * (b.v - a.v);
    }
  }
  return profile.back().v;
}

double Agent::distance_at(double t) const {
  if (profile.empty() || t <= 0.0) return 0.0;
  double dist = 0.0;
  double prev_t = 0.0;
  double prev_v = speed_at(0.0);
  auto advance = [&](double to) {
    const double v = speed_at(to);
    dist += 0.5 * (prev_v + v) * (to - prev_t);
    prev_t = to;
    prev_v = v;
  };
  for (const auto& k : profile) {
    if (k.t <= prev_t) continue;
    if (k.t >= t) break;
    advance(k.t);
  }
  advance(t);
  return dist;
}

Pose2 Agent::pose_at(const Centerline& cl, double t) const {
  const double s = std::clamp(start_arc + distance_at(t), 0.0, cl.length());
  const double h = cl.heading_at(s);
  const Vec2 c = cl.point_at(s);
  return {c.x - std::sin(h) * lateral, c.y + std::cos(h) * lateral, h};
}

double EgoState::speed() const { return std::hypot(vx, vy); }

EgoState state_from_poses(const Pose2& from, const Pose2& to, double dt) {
  const Vec2 v_world = (1.0 / dt) * (to.position() - from.position());
  const double c = std::cos(to.yaw), s = std::sin(to.yaw);
  return {to.x, to.y, to.yaw, c * v_world.x + s * v_world.y, -s * v_world.x + c * v_world.y};
}

std::size_t Scenario::frame_count() const {
  return static_cast<std::size_t>(std::llround(total_time() / kFrameDt)) + 1;
}

std::string check_scenario(const Scenario& s) {
  if (s.centerline.segment_count() == 0) return "missing centerline";
  const Projection p = s.centerline.project({s.ego_start.x, s.ego_start.y});
  if (p.distance > p.half_width) return "ego starts outside the corridor";
  if (s.centerline.length() < 1.5 * s.max_speed * s.total_time()) return "centerline too short for the horizon";
  if (s.cruise_speed > s.max_speed || s.ego_start.speed() > s.max_speed) return "ego speed above the domain maximum";
  if (s.ego_start.yaw <= -std::numbers::pi || s.ego_start.yaw > std::numbers::pi) return "ego yaw not wrapped";
  return {};
}

namespace {

Centerline make_centerline(Rng& rng, const DomainSpec& d, double length, double straight_prefix, double hw) {
  constexpr double ds = 0.5;
  std::vector<Vec2> pts;
  std::vector<double> widths;
  double heading = uniform(rng, -std::numbers::pi, std::numbers::pi);
  const double initial_heading = heading;
  Vec2 pos{uniform(rng, -50.0, 50.0), uniform(rng, -50.0, 50.0)};
  pts.push_back(pos);
  widths.push_back(hw);
  double travelled = 0.0;
  double seg_left = straight_prefix;
  double kappa = 0.0;
  while (travelled < length) {
    if (seg_left <= 0.0) {
      seg_left = uniform(rng, 10.0, 25.0);
      kappa = uniform(rng, 0.0, 1.0) < 0.3 ? 0.0 : uniform(rng, d.curvature.lo, d.curvature.hi);
      // Keep the corridor from curling back onto itself.
      const double drift = wrap_angle(heading - initial_heading);
      if (std::abs(drift) > 1.4 && kappa * drift > 0) kappa = -kappa;
    }
    const double mid = heading + 0.5 * kappa * ds;
    pos = pos + ds * Vec2{std::cos(mid), std::sin(mid)};
    heading += kappa * ds;
    travelled += ds;
    seg_left -= ds;
    pts.push_back(pos);
    widths.push_back(hw);
  }
  return Centerline(std::move(pts), std::move(widths));
}

}  // namespace

Scenario sample_scenario(const DomainSpec& domain, std::uint64_t seed, const ScenarioOptions& opt) {
  domain.validate();
  Rng rng(derive_seed(seed, domain.rng_label));
  for (int attempt = 0; attempt < opt.max_attempts; ++attempt) {
    Scenario s;
    s.seed = seed;
    s.domain = domain.name;
    s.style = domain.style;
    s.duration = opt.duration;
    s.max_speed = domain.ego_speed.hi;
    s.cruise_speed = uniform(rng, domain.ego_speed.lo, domain.ego_speed.hi);
    const double length = 1.5 * s.max_speed * s.total_time() + opt.start_arc + 30.0;
    const double hw = uniform(rng, domain.half_width.lo, domain.half_width.hi);
    s.centerline = make_centerline(rng, domain, length, opt.start_arc + 6.0, hw);

    s.ego_start_arc = opt.start_arc;
    const double h0 = s.centerline.heading_at(s.ego_start_arc);
    const Vec2 c0 = s.centerline.point_at(s.ego_start_arc);
    const double lat0 = uniform(rng, -0.4, 0.4);
    s.ego_start.x = c0.x - std::sin(h0) * lat0;
    s.ego_start.y = c0.y + std::cos(h0) * lat0;
    s.ego_start.yaw = wrap_angle(h0 + uniform(rng, -0.05, 0.05));
    s.ego_start.vx = s.cruise_speed * uniform(rng, 0.7, 1.0);
    s.ego_start.vy = 0.0;

    const double horizon_arc = s.ego_start_arc + s.cruise_speed * s.total_time();
    const double turn = wrap_angle(s.centerline.heading_at(std::min(horizon_arc, s.centerline.length())) - h0);
    if (uniform(rng, 0.0, 1.0) < opt.stop_probability) {
      s.command = Command::stop;
    } else if (turn >= opt.turn_threshold) {
      s.command = Command::turn_left;
    } else if (turn <= -opt.turn_threshold) {
      s.command = Command::turn_right;
    } else {
      s.command = Command::follow;
    }

    const bool lead = uniform(rng, 0.0, 1.0) < opt.lead_agent_probability;
    if (lead) {
      Agent a;
      a.start_arc = s.ego_start_arc + uniform(rng, 10.0, 22.0);
      a.lateral = 0.0;
      a.radius = 1.0;
      const double v = uniform(rng, domain.agent_speed.lo, domain.agent_speed.hi);
      a.profile.push_back({0.0, v});
      if (uniform(rng, 0.0, 1.0) < 0.3) {
        const double t_stop = uniform(rng, 3.0, 9.0);
        a.profile.push_back({t_stop, v});
        a.profile.push_back({t_stop + v / 1.0, 0.0});
      }
      s.agents.push_back(std::move(a));
    }

    const double region_lo = s.ego_start_arc + 10.0;
    const double region_hi = s.centerline.length() - 5.0;
    std::poisson_distribution<int> count_dist(domain.obstacle_density * (region_hi - region_lo) / 100.0);
    const int count = domain.obstacle_density > 0 ? count_dist(rng) : 0;
    for (int i = 0; i < count; ++i) {
      Obstacle o;
      const double arc = uniform(rng, region_lo, region_hi);
      o.radius = uniform(rng, 0.6, 1.2);
      double lat;
      if (!lead && uniform(rng, 0.0, 1.0) < opt.blocking_probability) {
        lat = uniform(rng, -0.5, 0.5);
      } else {
        const double min_lat = o.radius + kEgoRadius + 0.8;
        const double max_lat = std::max(min_lat, hw + 0.5 * o.radius);
        lat = uniform(rng, min_lat, max_lat) * (uniform(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0);
      }
      const double h = s.centerline.heading_at(arc);
      const Vec2 c = s.centerline.point_at(arc);
      o.center = {c.x - std::sin(h) * lat, c.y + std::cos(h) * lat};
      o.heading = h;
      s.obstacles.push_back(o);
    }
    if (check_scenario(s).empty()) return s;
  }
  throw Error("sample_scenario: no valid scenario after " + std::to_string(opt.max_attempts) + " attempts");
}

Scenario straight_scenario(double length, double half_width, double speed, Command command) {
  Scenario s;
  s.domain = "A";
  s.style = domain_a().style;
  std::vector<Vec2> pts;
  std::vector<double> widths;
  for (double x = 0.0; x <= length + 1e-9; x += 0.5) {
    pts.push_back({x, 0.0});
    widths.push_back(half_width);
  }
  s.centerline = Centerline(std::move(pts), std::move(widths));
  s.ego_start_arc = 10.0;
  s.ego_start = {10.0, 0.0, 0.0, speed, 0.0};
  s.cruise_speed = speed;
  s.max_speed = std::max(speed, 1e-9);
  s.command = command;
  s.duration = std::max(0.0, length / (1.5 * s.max_speed) - static_cast<double>(kWarmupSteps) * kFrameDt);
  s.duration = std::min(s.duration, 12.0);
  return s;
}

}  // namespace vawm::sim
