// Copyright 2026 The vawm Authors
// SPDX-License-Identifier: Apache-2.0

#include "vawm/rollout/rollout.hpp"

#include <cmath>

#include "vawm/error.hpp"
#include "vawm/rng.hpp"

namespace vawm::rollout {

using namespace sim;

const char* continuation_name(ContinuationMode m) {
  return m == ContinuationMode::buffer ? "buffer" : "single_frame";
}

ContinuationMode continuation_from_name(const std::string& name) {
  if (name == "buffer") return ContinuationMode::buffer;
  if (name == "single_frame") return ContinuationMode::single_frame;
  throw ParameterError("unknown continuation mode '" + name + "'");
}

HistoryBuffer::HistoryBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ParameterError("history buffer needs capacity >= 1");
}

void HistoryBuffer::push(Frame frame, codec::LatentFrame latent, std::size_t step) {
  if (!steps_.empty() && step <= steps_.back()) throw ContractError("history buffer: steps must increase");
  frames_.push_back(std::move(frame));
  latents_.push_back(std::move(latent));
  steps_.push_back(step);
  while (frames_.size() > capacity_) {
    frames_.pop_front();
    latents_.pop_front();
    steps_.pop_front();
  }
}

Planner expert_planner(ExpertConfig config) {
  Planner p;
  p.plan = [config](const PlanContext& ctx) {
    Plan plan;
    plan.actions = expert_policy(ctx.scenario, ctx.world, ctx.buffer.state, kStoredActionHorizon, config);
    return plan;
  };
  return p;
}

std::uint64_t cycle_seed(std::uint64_t base, std::uint64_t scenario_seed, std::size_t cycle) {
  return derive_seed(base, "plan", mix64(scenario_seed) + cycle);
}

flow::Condition<float> make_condition(const HistoryBuffer& buffer, const model::VaModel<float>& model) {
  const auto& c = model.config();
  if (buffer.size() != c.m) {
    throw ContractError("planner: buffer holds " + std::to_string(buffer.size()) + " frames, model expects " +
                        std::to_string(c.m));
  }
  flow::Condition<float> cond;
  cond.batch = 1;
  cond.hist_latents = diffcore::ArrayF({c.m * c.l_v(), c.latent_c});
  std::size_t off = 0;
  for (const auto& l : buffer.latents()) {
    if (l.values.size() != c.latent_size()) throw DimensionError("planner: buffer latent size mismatch");
    std::copy(l.values.begin(), l.values.end(), cond.hist_latents.ptr() + off);
    off += l.values.size();
  }
  const auto& n = model.normalizer();
  cond.state = diffcore::ArrayF({1, 2}, std::vector<float>{
      static_cast<float>((buffer.state.vx - n.state_mean[0]) / n.state_std[0]),
      static_cast<float>((buffer.state.vy - n.state_mean[1]) / n.state_std[1])});
  cond.commands = {static_cast<std::uint8_t>(buffer.command)};
  return cond;
}

std::vector<Pose2> denormalize_actions(const float* values, const model::Normalizer& norm, std::size_t k_actions) {
  std::vector<Pose2> out(k_actions);
  for (std::size_t k = 0; k < k_actions; ++k) {
    double a[3];
    for (std::size_t j = 0; j < 3; ++j) {
      const std::size_t i = k * 3 + j;
      a[j] = static_cast<double>(values[i]) * norm.action_std[i] + norm.action_mean[i];
    }
    out[k] = Pose2{a[0], a[1], wrap_angle(a[2])};
  }
  return out;
}

Planner model_planner(model::VaModel<float>& model, const codec::CodecParams& codec, const flow::SamplerConfig& sampler) {
  Planner p;
  p.encode = [&codec](const Frame& f) { return codec::encode_frame(f, codec); };
  p.plan = [&model, &codec, sampler](const PlanContext& ctx) {
    const auto& c = model.config();
    const auto cond = make_condition(ctx.buffer, model);
    flow::SamplerConfig sc = sampler;
    sc.seed = cycle_seed(sampler.seed, ctx.scenario.seed, ctx.cycle);
    const auto y = flow::sample(model, cond, sc);
    Plan plan;
    plan.actions = denormalize_actions(y.actions.ptr(), model.normalizer(), c.k_actions);
    if (!c.action_only) {
      const diffcore::ArrayF rows = y.latents.reshaped({c.n_pred, c.latent_size()});
      const diffcore::ArrayF frames = codec::decode_batch(rows, codec);
      for (std::size_t f = 0; f < c.n_pred; ++f) {
        plan.predicted_latents.push_back(codec::latent_from_row(rows, f, codec.config));
        Frame fr;
        fr.height = codec.config.frame_h;
        fr.width = codec.config.frame_w;
        fr.cells.assign(frames.ptr() + f * frames.cols(), frames.ptr() + (f + 1) * frames.cols());
        plan.predicted_frames.push_back(std::move(fr));
      }
    }
    return plan;
  };
  return p;
}

namespace {

void record_step(const Scenario& s, WarmState& st, const EgoState& ego, const Pose2& action, bool warm,
                 const Planner& planner) {
  StepRecord r;
  r.time = st.world.time;
  r.pose = ego.pose();
  r.vx = ego.vx;
  r.vy = ego.vy;
  r.action = action;
  r.collision = st.world.collision;
  r.off_corridor = st.world.off_corridor;
  r.warmup = warm;
  r.frame = render_frame(s, st.world, ego.pose());
  const std::size_t idx = st.log.steps.size();
  codec::LatentFrame latent;
  if (planner.encode) latent = planner.encode(r.frame);
  st.buffer.push(r.frame, std::move(latent), idx);
  st.buffer.state = ego;
  st.log.steps.push_back(std::move(r));
}

}  // namespace

WarmState warmup(const Scenario& s, const RolloutConfig& cfg, const Planner& planner) {
  WarmState st{HistoryBuffer(cfg.history()), initial_world(s), {}};
  st.log.scenario_seed = s.seed;
  st.log.domain = s.domain;
  st.buffer.command = s.command;
  record_step(s, st, s.ego_start, Pose2{}, true, planner);
  for (std::size_t i = 0; i < kWarmupSteps; ++i) {
    const EgoState ego = st.buffer.state;
    const auto chunk = expert_policy(s, st.world, ego);
    const Pose2 next = compose(ego.pose(), chunk.front());
    st.world = step_world(s, st.world, next);
    record_step(s, st, state_from_poses(ego.pose(), next), chunk.front(), true, planner);
  }
  st.log.warmup_steps = kWarmupSteps;
  return st;
}

void execute_and_slide(const Scenario& s, WarmState& st, const std::vector<Pose2>& actions, std::size_t execute_k,
                       const Planner& planner) {
  if (execute_k > actions.size()) throw ParameterError("execute_k exceeds the action chunk");
  const Pose2 origin = st.buffer.state.pose();
  Pose2 prev = origin;
  for (std::size_t i = 0; i < execute_k; ++i) {
    const Pose2 next = compose(origin, actions[i]);
    st.world = step_world(s, st.world, next);
    record_step(s, st, state_from_poses(prev, next), actions[i], false, planner);
    prev = next;
  }
}

std::size_t planned_cycles(const Scenario& s, const RolloutConfig& cfg) {
  if (cfg.execute_k == 0 || cfg.execute_k > kStoredActionHorizon) throw ParameterError("execute_k must be in [1, K]");
  const std::size_t steps = s.frame_count() - 1 - kWarmupSteps;
  return std::min(cfg.max_cycles, (steps + cfg.execute_k - 1) / cfg.execute_k);
}

RolloutLog run_closed_loop(const Scenario& s, const Planner& planner, const RolloutConfig& cfg) {
  const std::size_t cycles = planned_cycles(s, cfg);
  WarmState st = [&] {
    try {
      return warmup(s, cfg, planner);
    } catch (const PolicyError& e) {
      WarmState failed{HistoryBuffer(cfg.history()), initial_world(s), {}};
      failed.log.scenario_seed = s.seed;
      failed.log.domain = s.domain;
      failed.log.partial = true;
      failed.log.error = std::string("warm-up failed: ") + e.what();
      return failed;
    }
  }();
  if (st.log.partial) return std::move(st.log);
  const std::size_t last_step = s.frame_count() - 1;
  try {
    for (std::size_t c = 0; c < cycles; ++c) {
      const std::size_t now = st.log.steps.size() - 1;
      if (now >= last_step) break;
      CycleRecord rec;
      rec.step = now;
      rec.plan_pose = st.buffer.state.pose();
      rec.state = st.buffer.state;
      rec.history_steps.assign(st.buffer.steps().begin(), st.buffer.steps().end());
      Plan plan = planner.plan(PlanContext{st.buffer, s, st.world, c});
      const std::size_t k = std::min({cfg.execute_k, plan.actions.size(), last_step - now});
      execute_and_slide(s, st, plan.actions, k, planner);
      rec.actions = std::move(plan.actions);
      rec.predicted_frames = std::move(plan.predicted_frames);
      rec.predicted_latents = std::move(plan.predicted_latents);
      rec.executed = k;
      st.log.cycles.push_back(std::move(rec));
    }
  } catch (const PolicyError& e) {
    st.log.partial = true;
    st.log.error = e.what();
  }
  return std::move(st.log);
}

}  // namespace vawm::rollout
