// Copyright 2026 The vawm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "vawm/model/vamodel.hpp"

namespace vawm::flow {

using diffcore::NdArray;
using diffcore::Tape;
using diffcore::Var;
using model::ModelConfig;
using model::ModelInput;
using model::VaModel;

template <typename T>
struct Interpolated {
  NdArray<T> y_s;
  NdArray<T> velocity;
};

/// y_s = (1 - s) eps + s y0, velocity = y0 - eps.
template <typename T>
Interpolated<T> interpolate(const NdArray<T>& y0, const NdArray<T>& eps, double s);

/// Condition shared by training batches and the sampler.
template <typename T>
struct Condition {
  std::size_t batch = 0;
  NdArray<T> hist_latents;  // [B*m*L_V x c]
  NdArray<T> state;         // [B x 2]
  std::vector<std::uint8_t> commands;
};

/// Clean targets, noise and flow times for a batch.
template <typename T>
struct FlowBatch {
  Condition<T> cond;
  NdArray<T> y0_latents;   // [B*n_pred*L_V x c]; empty when action_only
  NdArray<T> y0_actions;   // [B*K x 3]
  NdArray<T> eps_latents;
  NdArray<T> eps_actions;
  std::vector<double> s;
};

struct LossConfig {
  double lambda_act = 1.0;       // weight of ACT elements in the FM loss
  bool aux_regression = false;   // add a direct regression on the one-step denoised actions
  double aux_weight = 1.0;
  double action_ae_weight = 0.1; // readout(embed(a)) ~ a on clean actions
};

/// Draw eps ~ N(0, I) and s ~ U(0, 1) for every sample from `seed`.
template <typename T>
void draw_noise(FlowBatch<T>& batch, const ModelConfig& config, std::uint64_t seed);

/// Model input at the batch's flow times on the noised targets.
template <typename T>
ModelInput<T> noised_input(const FlowBatch<T>& batch);

/// Weighted mean squared error between the model velocity and (y0 - eps):
/// (sum_lat e^2 + lambda_act * sum_act e^2) / (n_lat + n_act).
template <typename T>
Var<T> fm_loss_from_output(Tape<T>& t, const model::ModelOutput<T>& out, const FlowBatch<T>& batch, double lambda_act);

template <typename T>
Var<T> fm_loss(Tape<T>& t, VaModel<T>& model, const FlowBatch<T>& batch, double lambda_act = 1.0);

/// FM loss plus the optional auxiliary terms of LossConfig.
template <typename T>
Var<T> training_loss(Tape<T>& t, VaModel<T>& model, const FlowBatch<T>& batch, const LossConfig& cfg);

struct SamplerConfig {
  std::size_t steps = 2;
  std::uint64_t seed = 0;
};

/// Target-block state: future latents and actions in data space.
template <typename T>
struct Targets {
  NdArray<T> latents;  // [B*n_pred*L_V x c]; empty when action_only
  NdArray<T> actions;  // [B*K x 3]
};

/// Velocity callback: v(y, s) with y holding both target parts.
template <typename T>
using VelocityFn = std::function<Targets<T>(const Targets<T>& y, double s)>;

/// Forward Euler from y_init with step 1/steps at s_k = k/steps. `after_step`
/// may overwrite parts of y after every update (used for clamping).
template <typename T>
Targets<T> euler_integrate(const VelocityFn<T>& v, Targets<T> y_init, std::size_t steps,
                           const std::function<void(Targets<T>&, double s_next)>& after_step = nullptr);

/// Standard-normal initial target block for B samples from `seed`.
template <typename T>
Targets<T> initial_noise(const ModelConfig& config, std::size_t batch, std::uint64_t seed);

template <typename T>
VelocityFn<T> model_velocity(VaModel<T>& model, const Condition<T>& cond);

template <typename T>
Targets<T> sample(VaModel<T>& model, const Condition<T>& cond, const SamplerConfig& cfg);

/// Regenerate the actions with the video part pinned to the interpolation
/// path towards `video` (same noise draw as sample() for `cfg.seed`).
template <typename T>
Targets<T> sample_actions_given_video(VaModel<T>& model, const Condition<T>& cond, const NdArray<T>& video,
                                      const SamplerConfig& cfg);

/// Per-sample split of a target block into n_pred latent grids and K actions.
template <typename T>
struct SplitTargets {
  std::vector<std::vector<T>> latents;  // n_pred entries of L_V*c values
  std::vector<std::array<T, 3>> actions;
};

/// Split one sample's flat target vector [latents..., actions...].
template <typename T>
SplitTargets<T> split_targets(const std::vector<T>& flat, const ModelConfig& config);
/// Inverse of split_targets.
template <typename T>
std::vector<T> join_targets(const SplitTargets<T>& parts, const ModelConfig& config);
/// Flat target vector of sample b.
template <typename T>
std::vector<T> flatten_sample(const Targets<T>& y, std::size_t b, const ModelConfig& config);

}  // namespace vawm::flow
