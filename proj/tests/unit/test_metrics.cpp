// Copyright 2026 The vawm Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <doctest.h>

#include "vawm/error.hpp"
#include "vawm/metrics/closed_loop.hpp"
#include "vawm/metrics/consistency.hpp"
#include "vawm/metrics/open_loop.hpp"
#include "vawm/rollout/rollout.hpp"

using namespace vawm;
using namespace vawm::sim;
using namespace vawm::metrics;

namespace {

// Log whose ego visits `poses` one frame apart.
rollout::RolloutLog log_from_poses(const Scenario& s, const std::vector<Pose2>& poses, std::size_t warmup = 0) {
  rollout::RolloutLog log;
  log.warmup_steps = warmup;
  WorldState w = initial_world(s);
  for (std::size_t i = 0; i < poses.size(); ++i) {
    if (i > 0) w = step_world(s, w, poses[i]);
    rollout::StepRecord r;
    r.time = w.time;
    r.pose = poses[i];
    if (i == 0) {
      r.vx = s.ego_start.vx;
    } else {
      const EgoState e = state_from_poses(poses[i - 1], poses[i]);
      r.vx = e.vx;
      r.vy = e.vy;
    }
    r.collision = i > 0 && w.collision;
    r.off_corridor = i > 0 ? w.off_corridor : !inside_corridor(s, poses[i].position());
    log.steps.push_back(r);
  }
  return log;
}

std::vector<Pose2> straight_poses(double x0, double speed, std::size_t n, double y = 0.0) {
  std::vector<Pose2> p;
  for (std::size_t i = 0; i < n; ++i) p.push_back({x0 + speed * kFrameDt * static_cast<double>(i), y, 0.0});
  return p;
}

}  // namespace

TEST_CASE("pdms arithmetic and range checks") {
  CHECK(pdms({1, 1, 1, 1, 1}) == 1.0);
  CHECK(pdms({0, 1, 1, 1, 1}) == 0.0);
  CHECK(pdms({1, 0, 1, 1, 1}) == 0.0);
  CHECK(pdms({1, 1, 1, 1, 0.5}) == (2.5 + 5.0 + 2.0) / 12.0);
  CHECK(pdms({1, 1, 0, 0, 0.25}) == 1.25 / 12.0);
  CHECK_THROWS_AS(pdms({1, 1, 1, 1, 1.5}), ParameterError);
  CHECK_THROWS_AS(pdms({1, 1, 1, 1, -0.1}), ParameterError);
  CHECK_THROWS_AS(pdms({0.5, 1, 1, 1, 1}), ParameterError);
  CHECK_THROWS_AS(pdms({1, 1, 1, 1, std::nan("")}), ParameterError);
}

TEST_CASE("pdms is monotone in every sub-score") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::bernoulli_distribution b(0.5);
  for (int trial = 0; trial < 500; ++trial) {
    SubScores s{double(b(rng)), double(b(rng)), double(b(rng)), double(b(rng)), u(rng)};
    const double base = pdms(s);
    SubScores t = s;
    t.nc = 1;
    CHECK(pdms(t) >= base);
    t = s;
    t.dac = 1;
    CHECK(pdms(t) >= base);
    t = s;
    t.ttc = 1;
    CHECK(pdms(t) >= base);
    t = s;
    t.comfort = 1;
    CHECK(pdms(t) >= base);
    t = s;
    t.ep = std::min(1.0, s.ep + u(rng));
    CHECK(pdms(t) >= base);
  }
}

TEST_CASE("fleet score averages per-scenario pdms") {
  const std::vector<SubScores> v{{1, 1, 1, 1, 1}, {0, 1, 1, 1, 1}};
  const FleetScores f = fleet(v);
  CHECK(f.pdms == 0.5);
  CHECK(f.mean.nc == 0.5);
  CHECK(f.mean.ep == 1.0);
  // Applying the formula to the averages would give 0.5 as well here; a
  // mixed case separates the two.
  const FleetScores g = fleet({{1, 0, 1, 1, 1}, {1, 1, 1, 1, 0}});
  CHECK(g.pdms == doctest::Approx((0.0 + 7.0 / 12.0) / 2.0));
  CHECK(g.pdms != doctest::Approx(pdms(SubScores{1, 1, 1, 1, 1}) * 0.5 * (5 * 0.5 + 5 + 2) / 12.0));
  CHECK(fleet({}).scenarios == 0);
}

TEST_CASE("no_collision and drivable area") {
  Scenario s = straight_scenario(200, 3, 3);
  const auto clean = log_from_poses(s, straight_poses(10, 3, 20));
  CHECK(no_collision(clean) == 1.0);
  CHECK(drivable_area_compliance(clean) == 1.0);

  s.obstacles.push_back(Obstacle{{25, 0}, 1.0, 0});
  CHECK(no_collision(log_from_poses(s, straight_poses(10, 3, 20))) == 0.0);

  const Scenario t = straight_scenario(200, 3, 3);
  std::vector<Pose2> excursion = straight_poses(10, 3, 10);
  excursion[5].y = 3.5;
  CHECK(drivable_area_compliance(log_from_poses(t, excursion)) == 0.0);
  CHECK(drivable_area_compliance(log_from_poses(t, straight_poses(10, 3, 10, 3.0))) == 1.0);
}

TEST_CASE("ttc projection examples") {
  Scenario s = straight_scenario(200, 3, 2);
  CHECK(ttc_score(s, log_from_poses(s, {{10, 0, 0}})) == 1.0);
  // Gap of 1 m between discs at 2 m/s: contact after 0.5 s.
  s.obstacles.push_back(Obstacle{{13, 0}, 1.0, 0});
  CHECK(ttc_score(s, log_from_poses(s, {{10, 0, 0}})) == 0.0);
  // Gap of 3 m: contact at 1.5 s, beyond the horizon.
  s.obstacles[0].center = {15, 0};
  CHECK(ttc_score(s, log_from_poses(s, {{10, 0, 0}})) == 1.0);
  // Simulating the constant-velocity ego confirms the contact time.
  double contact = -1;
  for (int i = 1; i <= 40; ++i) {
    const double t = 0.1 * i;
    if (collides(s, {}, {10 + 2 * t, 0})) {
      contact = t;
      break;
    }
  }
  CHECK(contact == doctest::Approx(1.6));  // first 0.1 s substep past strict contact at 1.5 s
}

TEST_CASE("comfort from finite differences") {
  const Scenario s = straight_scenario(200, 3, 3);
  CHECK(comfort(log_from_poses(s, straight_poses(10, 3, 20))) == 1.0);
  auto jump = straight_poses(10, 3, 20);
  for (std::size_t i = 10; i < jump.size(); ++i) jump[i].x += 2.0;
  CHECK(comfort(log_from_poses(s, jump)) == 0.0);
  // Gentle braking at 1 m/s^2 stays comfortable.
  std::vector<Pose2> brake;
  double x = 10, v = 3;
  for (int i = 0; i < 10; ++i) {
    brake.push_back({x, 0, 0});
    v = std::max(0.0, v - 0.5);
    x += v * kFrameDt;
  }
  CHECK(comfort(log_from_poses(s, brake)) == 1.0);
}

TEST_CASE("ego progress against the expert reference") {
  const Scenario s = straight_scenario(200, 3, 3);
  const auto expert = log_from_poses(s, straight_poses(10, 3, 20), 3);
  CHECK(ego_progress(s, expert, expert) == 1.0);
  CHECK(ego_progress(s, log_from_poses(s, std::vector<Pose2>(20, Pose2{10, 0, 0}), 3), expert) == 0.0);
  // Half speed after warm-up.
  std::vector<Pose2> half = straight_poses(10, 3, 4);
  for (std::size_t i = 4; i < 20; ++i) half.push_back({half[3].x + 1.5 * kFrameDt * double(i - 3), 0, 0});
  CHECK(ego_progress(s, log_from_poses(s, half, 3), expert) == doctest::Approx(0.5));
  // A nearly stationary expert makes EP trivially 1.
  const auto parked = log_from_poses(s, std::vector<Pose2>(20, Pose2{10, 0, 0}), 3);
  CHECK(ego_progress(s, log_from_poses(s, std::vector<Pose2>(20, Pose2{10, 0, 0}), 3), parked) == 1.0);
  // Faster than the expert is clipped.
  CHECK(ego_progress(s, expert, log_from_poses(s, half, 3)) == 1.0);
}

TEST_CASE("expert rollouts are scored clean on domain A") {
  rollout::RolloutConfig cfg;
  std::vector<SubScores> all;
  int nc = 0, comf = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Scenario s = sample_scenario(domain_a(), 1000 + seed);
    const auto log = rollout::run_closed_loop(s, rollout::expert_planner(), cfg);
    REQUIRE_FALSE(log.partial);
    const SubScores sc = score_rollout(s, log, log);
    INFO("seed " << seed << " nc " << sc.nc << " dac " << sc.dac << " ttc " << sc.ttc << " c " << sc.comfort);
    CHECK(sc.ep == 1.0);
    nc += sc.nc == 1.0;
    comf += sc.comfort == 1.0;
    all.push_back(sc);
  }
  CHECK(nc >= 50);
  CHECK(comf >= 48);
  CHECK(fleet(all).pdms >= 0.95);
}

TEST_CASE("open-loop metrics") {
  const Scenario s = straight_scenario(200, 3, 3);
  std::vector<Pose2> gt;
  for (int i = 1; i <= 8; ++i) gt.push_back({1.5 * i, 0, 0});
  OpenLoopSample same{&s, 1.5, {10, 0, 0}, gt, gt};
  auto r = open_loop_metrics({same});
  CHECK(r.l2_avg == 0.0);
  CHECK(r.collision_avg == 0.0);
  auto shifted = gt;
  for (auto& p : shifted) p.y += 1.0;
  r = open_loop_metrics({{&s, 1.5, {10, 0, 0}, shifted, gt}});
  for (double v : r.l2) CHECK(v == doctest::Approx(1.0));
  CHECK(r.l2_avg == doctest::Approx(1.0));
  CHECK_THROWS_AS(open_loop_metrics({{&s, 0, {}, gt, std::vector<Pose2>(gt.begin(), gt.begin() + 5)}}), DimensionError);
}

TEST_CASE("open-loop metrics match a brute-force recomputation") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0.0, 1.5);
  std::vector<Scenario> scenarios;
  for (std::uint64_t i = 0; i < 6; ++i) scenarios.push_back(sample_scenario(domain_a(), 300 + i));
  std::vector<OpenLoopSample> samples;
  for (int k = 0; k < 30; ++k) {
    const Scenario& s = scenarios[k % scenarios.size()];
    const double t = 0.5 * (k % 5);
    const Pose2 origin{s.ego_start.x, s.ego_start.y, s.ego_start.yaw};
    std::vector<Pose2> pred, gt;
    for (int i = 1; i <= 8; ++i) {
      gt.push_back({2.0 * i, 0.1 * i, 0.01 * i});
      pred.push_back({2.0 * i + n(rng), 0.1 * i + n(rng), 0});
    }
    samples.push_back({&s, t, origin, pred, gt});
  }
  const auto r = open_loop_metrics(samples);
  const int horizons[3] = {2, 4, 6};
  for (int h = 0; h < 3; ++h) {
    double l2 = 0, cr = 0;
    for (const auto& sm : samples) {
      const auto& p = sm.predicted[horizons[h] - 1];
      const auto& g = sm.ground_truth[horizons[h] - 1];
      l2 += std::sqrt((p.x - g.x) * (p.x - g.x) + (p.y - g.y) * (p.y - g.y));
      const double c = std::cos(sm.origin.yaw), sn = std::sin(sm.origin.yaw);
      const double wx = sm.origin.x + c * p.x - sn * p.y, wy = sm.origin.y + sn * p.x + c * p.y;
      bool hit = false;
      for (const auto& o : sm.scenario->obstacles)
        hit = hit || std::hypot(wx - o.center.x, wy - o.center.y) < o.radius + kEgoRadius;
      for (const auto& a : sm.scenario->agents) {
        const Pose2 ap = a.pose_at(sm.scenario->centerline, sm.time + 0.5 * horizons[h]);
        hit = hit || std::hypot(wx - ap.x, wy - ap.y) < a.radius + kEgoRadius;
      }
      cr += hit;
    }
    CHECK(r.l2[h] == doctest::Approx(l2 / 30.0).epsilon(1e-12));
    CHECK(r.collision_rate[h] == doctest::Approx(cr / 30.0));
  }
}

TEST_CASE("umeyama alignment recovers exact similarities") {
  std::vector<Vec2> ref{{0, 0}, {1, 0.2}, {2.5, 0.1}, {3, 1.4}, {4.2, 2.0}};
  Alignment a = umeyama_align(ref, ref);
  CHECK(a.transform.scale == doctest::Approx(1.0));
  CHECK(a.transform.rotation == doctest::Approx(0.0));
  CHECK(a.rms < 1e-12);

  const double th = std::numbers::pi / 6;
  std::vector<Vec2> traj;
  for (const auto& p : ref)
    traj.push_back({2 * (std::cos(th) * p.x - std::sin(th) * p.y) + 5, 2 * (std::sin(th) * p.x + std::cos(th) * p.y) - 3});
  a = umeyama_align(traj, ref);
  CHECK(a.transform.scale == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(a.transform.rotation == doctest::Approx(-th).epsilon(1e-12));
  CHECK(a.rms < 1e-9);
  for (std::size_t i = 0; i < ref.size(); ++i) CHECK(norm(a.transform.apply(traj[i]) - ref[i]) < 1e-9);

  CHECK_THROWS_AS(umeyama_align(ref, std::vector<Vec2>(5, Vec2{1, 1})), ContractError);
  CHECK_THROWS_AS(umeyama_align(ref, std::vector<Vec2>(4, Vec2{1, 1})), DimensionError);
  CHECK_THROWS_AS(umeyama_align({{0, 0}}, {{1, 1}}), ContractError);
}

TEST_CASE("umeyama excludes reflections and matches a brute-force search") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Vec2> ref, traj;
    for (int i = 0; i < 9; ++i) {
      ref.push_back({1.5 * i + 0.3 * n(rng), 0.2 * i * i * 0.1 + 0.3 * n(rng)});
      traj.push_back({0.7 * ref.back().x + 0.2 * n(rng) + 1, 0.7 * ref.back().y + 0.2 * n(rng)});
    }
    const Alignment a = umeyama_align(traj, ref);
    // Grid over rotation; scale and translation have closed forms per angle.
    Vec2 mx{0, 0}, my{0, 0};
    for (std::size_t i = 0; i < ref.size(); ++i) {
      mx = mx + (1.0 / 9) * traj[i];
      my = my + (1.0 / 9) * ref[i];
    }
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 72000; ++k) {
      const double th = 2 * std::numbers::pi * k / 72000.0;
      const double c = std::cos(th), s = std::sin(th);
      double num = 0, den = 0;
      for (std::size_t i = 0; i < ref.size(); ++i) {
        const Vec2 x = traj[i] - mx, y = ref[i] - my;
        num += (c * x.x - s * x.y) * y.x + (s * x.x + c * x.y) * y.y;
        den += x.x * x.x + x.y * x.y;
      }
      const double sc = std::max(0.0, num / den);
      double sq = 0;
      for (std::size_t i = 0; i < ref.size(); ++i) {
        const Vec2 x = traj[i] - mx, y = ref[i] - my;
        const Vec2 p{sc * (c * x.x - s * x.y), sc * (s * x.x + c * x.y)};
        sq += (p.x - y.x) * (p.x - y.x) + (p.y - y.y) * (p.y - y.y);
      }
      best = std::min(best, std::sqrt(sq / 9));
    }
    CHECK(a.rms <= best + 1e-9);
    CHECK(a.rms == doctest::Approx(best).epsilon(1e-4));
  }
  // A mirrored copy cannot be fitted exactly without a reflection.
  std::vector<Vec2> ref{{0, 0}, {1, 0}, {2, 1}, {3, 3}};
  std::vector<Vec2> mirrored;
  for (const auto& p : ref) mirrored.push_back({p.x, -p.y});
  CHECK(umeyama_align(mirrored, ref).rms > 0.1);
}

TEST_CASE("umeyama residual is invariant under a global similarity of the input") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<Vec2> ref, traj;
  for (int i = 0; i < 9; ++i) {
    ref.push_back({1.0 * i, 0.3 * n(rng)});
    traj.push_back({1.0 * i + 0.2 * n(rng), 0.2 * n(rng)});
  }
  const double base = umeyama_align(traj, ref).rms;
  for (int trial = 0; trial < 20; ++trial) {
    const Similarity2D g{std::exp(n(rng)), n(rng), {5 * n(rng), 5 * n(rng)}};
    std::vector<Vec2> moved;
    for (const auto& p : traj) moved.push_back(g.apply(p));
    CHECK(umeyama_align(moved, ref).rms == doctest::Approx(base).epsilon(1e-9));
  }
}

TEST_CASE("avg_l2 identities") {
  const std::vector<Vec2> ref{{0, 0}, {1, 0.5}, {2, 1.5}, {3, 3}};
  CHECK(avg_l2(ref, ref) == 0.0);
  std::vector<Vec2> off;
  for (const auto& p : ref) off.push_back({p.x + 0.3, p.y - 0.4});
  CHECK(avg_l2(off, ref) == doctest::Approx(0.5));
  CHECK(avg_l2(off, ref) == avg_l2(ref, off));
  CHECK(avg_l2(umeyama_align(off, ref).aligned, ref) < 1e-12);
  CHECK_THROWS_AS(avg_l2(ref, std::vector<Vec2>(3)), DimensionError);
}

namespace {

Frame render_at(const Scenario& s, const Pose2& ego) {
  WorldState w = initial_world(s);
  return render_frame(s, w, ego);
}

// Domain-A scene with enough structure in view for registration.
Scenario textured_scene() {
  for (std::uint64_t seed = 0;; ++seed) {
    Scenario s = sample_scenario(domain_a(), 40 + seed);
    if (s.obstacles.size() >= 2) return s;
  }
}

}  // namespace

TEST_CASE("odometry: zero motion and shape checks") {
  const Scenario s = textured_scene();
  const Frame f = render_at(s, s.ego_start.pose());
  const auto m = estimate_odometry({f, f, f});
  REQUIRE(m.size() == 2);
  for (const auto& r : m) {
    CHECK(r.dx == 0.0);
    CHECK(r.dy == 0.0);
    CHECK(r.dyaw == 0.0);
  }
  // A blank pair ties everywhere and also resolves to zero motion.
  Frame blank = f;
  std::fill(blank.cells.begin(), blank.cells.end(), 0.0f);
  const auto z = register_pair(blank, blank);
  CHECK((z.dx == 0.0 && z.dy == 0.0 && z.dyaw == 0.0));
  Frame small = f;
  small.height = 16;
  small.cells.resize(16 * 32);
  CHECK_THROWS_AS(register_pair(f, small), DimensionError);
  CHECK_THROWS_AS(estimate_odometry({f}), ContractError);
}

TEST_CASE("odometry: render-and-recover translation and yaw") {
  const Scenario s = textured_scene();
  const Pose2 p0 = s.ego_start.pose();
  const Pose2 fwd = compose(p0, {0.5, 0, 0});
  auto r = register_pair(render_at(s, p0), render_at(s, fwd));
  CHECK(std::abs(r.dx - 0.5) <= 0.25);
  CHECK(std::abs(r.dy) <= 0.25);
  CHECK(std::abs(r.dyaw) <= 2.5 * std::numbers::pi / 180);

  const Pose2 yawed = compose(p0, {0, 0, 5 * std::numbers::pi / 180});
  r = register_pair(render_at(s, p0), render_at(s, yawed));
  CHECK(std::abs(r.dyaw - 5 * std::numbers::pi / 180) <= 2.5 * std::numbers::pi / 180);

  const auto pts = chain_trajectory({{1, 0, std::numbers::pi / 2}, {1, 0, 0}});
  REQUIRE(pts.size() == 3);
  CHECK(pts[2].x == doctest::Approx(1.0));
  CHECK(pts[2].y == doctest::Approx(1.0));
}

TEST_CASE("consistency: contracts and expert ground-truth column") {
  CHECK_THROWS_AS(trajectory_consistency({}, {}), ContractError);
  rollout::RolloutConfig cfg;
  std::vector<rollout::RolloutLog> logs;
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const Scenario s = sample_scenario(domain_a(), 500 + seed);
    logs.push_back(rollout::run_closed_loop(s, rollout::expert_planner(), cfg));
  }
  const auto rep = consistency_report(logs, [](const Frame& f) { return f; });
  REQUIRE(rep.scenarios.size() == 4);
  std::size_t used = 0;
  for (const auto& sc : rep.scenarios) used += sc.gt_cycles;
  CHECK(used > 0);
  CHECK(rep.gt_l2 <= 0.3);
}
