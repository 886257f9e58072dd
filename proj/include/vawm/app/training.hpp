// Copyright 2026 The vawm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <vector>

#include "vawm/app/checkpoint.hpp"
#include "vawm/sim/dataset.hpp"

namespace vawm::app {

/// Training windows with codec latents precomputed. Per-window blocks are
/// stored contiguously: history m*latent, future n_pred*latent, raw state
/// (vx, vy), raw actions K*3 in the ego frame of the newest history frame.
struct WindowSet {
  model::ModelConfig config;
  std::size_t count = 0;
  std::vector<float> hist;
  std::vector<float> future;
  std::vector<float> state;
  std::vector<float> actions;
  std::vector<std::uint8_t> commands;
};

/// Encode every frame once and cut stride-1 windows.
WindowSet build_windows(const std::vector<sim::Episode>& episodes, const codec::CodecParams& codec,
                        const model::ModelConfig& config);

/// Per-feature mean/std over the windows, rounded to float precision, with
/// standard deviations floored at `min_std`.
model::Normalizer fit_normalizer(const WindowSet& w, double min_std = 1e-3);

/// Normalised flow batch for the given window indices (noise drawn from `noise_seed`).
flow::FlowBatch<float> make_batch(const WindowSet& w, const model::Normalizer& norm,
                                  const std::vector<std::size_t>& indices, std::uint64_t noise_seed);

struct TrainProgress {
  std::size_t step = 0;
  double loss = 0.0;
  double lr = 0.0;
};

struct TrainHooks {
  std::function<void(const TrainProgress&)> on_step;
  /// Called every `checkpoint_every` steps and after the last one.
  std::function<void(std::size_t step, const model::VaModel<float>&)> on_checkpoint;
};

/// AdamW on the flow-matching objective with linear warm-up from 1e-3 of the
/// base rate. Batches are drawn with replacement from a seeded stream.
std::vector<double> train_model(model::VaModel<float>& model, const WindowSet& windows, const TrainConfig& cfg,
                                const TrainHooks& hooks = {});

/// Training-set frames for the codec.
std::vector<const sim::Frame*> all_frames(const std::vector<sim::Episode>& episodes);

/// Full pipeline on in-memory episodes: codec first (then frozen), model second.
Bundle train_bundle(const RunConfig& config, const std::vector<sim::Episode>& train_episodes,
                    const TrainHooks& hooks = {}, std::vector<double>* loss_curve = nullptr,
                    const codec::CodecParams* pretrained_codec = nullptr);

}  // namespace vawm::app
