// Copyright 2026 The vawm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <string>
#include <vector>

#include "vawm/codec/codec.hpp"
#include "vawm/flow/flow.hpp"
#include "vawm/sim/dataset.hpp"
#include "vawm/sim/render.hpp"

namespace vawm::rollout {

using sim::EgoState;
using sim::Frame;
using sim::Pose2;

enum class ContinuationMode : std::uint8_t { buffer, single_frame };

const char* continuation_name(ContinuationMode m);
ContinuationMode continuation_from_name(const std::string& name);

struct RolloutConfig {
  std::size_t execute_k = 8;
  std::size_t max_cycles = 64;
  flow::SamplerConfig sampler;
  ContinuationMode continuation = ContinuationMode::buffer;

  /// History length implied by the continuation mode.
  std::size_t history() const { return continuation == ContinuationMode::buffer ? 4 : 1; }
};

/// Sliding window over the most recent observations.
class HistoryBuffer {
 public:
  explicit HistoryBuffer(std::size_t capacity);

  /// Appends and evicts the oldest entry beyond capacity. `latent` may be
  /// empty when no encoder is attached.
  void push(Frame frame, codec::LatentFrame latent, std::size_t step);

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return frames_.size(); }
  bool warmed() const { return frames_.size() == capacity_; }
  const std::deque<Frame>& frames() const { return frames_; }
  const std::deque<codec::LatentFrame>& latents() const { return latents_; }
  const std::deque<std::size_t>& steps() const { return steps_; }

  EgoState state;
  sim::Command command = sim::Command::follow;

 private:
  std::size_t capacity_;
  std::deque<Frame> frames_;
  std::deque<codec::LatentFrame> latents_;
  std::deque<std::size_t> steps_;
};

struct Plan {
  std::vector<Pose2> actions;  // K waypoints in the ego frame at planning time
  std::vector<Frame> predicted_frames;
  std::vector<codec::LatentFrame> predicted_latents;
};

struct PlanContext {
  const HistoryBuffer& buffer;
  const sim::Scenario& scenario;
  const sim::WorldState& world;
  std::size_t cycle;
};

struct Planner {
  std::function<Plan(const PlanContext&)> plan;
  std::function<codec::LatentFrame(const Frame&)> encode;  // optional
};

/// Privileged expert; ignores the observations.
Planner expert_planner(sim::ExpertConfig config = {});

/// Joint video-action planner. The model, codec and sampler settings are
/// referenced, not copied.
Planner model_planner(model::VaModel<float>& model, const codec::CodecParams& codec, const flow::SamplerConfig& sampler);

/// Normalised condition (batch 1) for the model from a warmed buffer.
flow::Condition<float> make_condition(const HistoryBuffer& buffer, const model::VaModel<float>& model);

/// Denormalise one sample's action block into ego-frame poses.
std::vector<Pose2> denormalize_actions(const float* values, const model::Normalizer& norm, std::size_t k_actions);

/// Sampler seed of one planning cycle.
std::uint64_t cycle_seed(std::uint64_t base, std::uint64_t scenario_seed, std::size_t cycle);

struct StepRecord {
  double time = 0.0;
  Pose2 pose;
  double vx = 0.0;
  double vy = 0.0;
  Pose2 action;  // executed waypoint in the planning ego frame; zero at step 0
  bool collision = false;
  bool off_corridor = false;
  bool warmup = false;
  Frame frame;
};

struct CycleRecord {
  std::size_t step = 0;  // index of the step the plan was made from
  Pose2 plan_pose;
  EgoState state;
  std::vector<std::size_t> history_steps;
  std::vector<Pose2> actions;
  std::vector<Frame> predicted_frames;
  std::vector<codec::LatentFrame> predicted_latents;
  std::size_t executed = 0;
};

struct RolloutLog {
  std::uint64_t scenario_seed = 0;
  std::string domain;
  std::size_t warmup_steps = 0;
  std::vector<StepRecord> steps;
  std::vector<CycleRecord> cycles;
  bool partial = false;
  std::string error;
};

struct WarmState {
  HistoryBuffer buffer;
  sim::WorldState world;
  RolloutLog log;
};

/// Initial frame plus kWarmupSteps expert steps; the buffer keeps the last
/// `cfg.history()` observations.
WarmState warmup(const sim::Scenario& s, const RolloutConfig& cfg, const Planner& planner);

/// Execute the first `execute_k` actions from the current pose, recording
/// each step and sliding the buffer.
void execute_and_slide(const sim::Scenario& s, WarmState& state, const std::vector<Pose2>& actions, std::size_t execute_k,
                       const Planner& planner);

/// Number of planning cycles needed to cover the closed-loop horizon.
std::size_t planned_cycles(const sim::Scenario& s, const RolloutConfig& cfg);

RolloutLog run_closed_loop(const sim::Scenario& s, const Planner& planner, const RolloutConfig& cfg);

}  // namespace vawm::rollout
