// Copyright 2026 The vawm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "vawm/diffcore/tape.hpp"
#include "vawm/sim/render.hpp"

namespace vawm::codec {

using diffcore::ArrayF;
using diffcore::ParameterStore;

/// Latent grid h x w x c, stored with index (row * w + col) * c + channel so
/// that raster-flattening yields h*w tokens of c features.
struct LatentFrame {
  std::size_t h = 4;
  std::size_t w = 4;
  std::size_t c = 4;
  std::size_t index = 0;
  std::vector<float> values;

  std::size_t size() const { return h * w * c; }
  float at(std::size_t r, std::size_t col, std::size_t ch) const { return values[(r * w + col) * c + ch]; }
  friend bool operator==(const LatentFrame&, const LatentFrame&) = default;
};

struct CodecConfig {
  std::size_t frame_h = 32;
  std::size_t frame_w = 32;
  std::size_t hidden = 256;
  std::size_t latent_h = 4;
  std::size_t latent_w = 4;
  std::size_t latent_c = 4;

  std::size_t pixels() const { return frame_h * frame_w; }
  std::size_t latent_size() const { return latent_h * latent_w * latent_c; }
};

/// Encoder: pixels -> hidden (SiLU) -> latent (tanh), then standardised with
/// the stored statistics. Decoder mirrors it with a linear output clipped to
/// [0, 1].
struct CodecParams {
  CodecConfig config;
  ParameterStore<float> weights;
  std::vector<float> latent_mean;
  std::vector<float> latent_std;
  std::size_t epochs = 0;
  double final_loss = 0.0;
};

CodecParams init_codec(const CodecConfig& config, std::uint64_t seed);
void validate_codec(const CodecParams& p);

/// Frames as rows of an [n x pixels] array.
ArrayF frames_to_array(const std::vector<const sim::Frame*>& frames, const CodecConfig& config);

/// Standardised latents, one row per input row.
ArrayF encode_batch(const ArrayF& pixels, const CodecParams& p);
/// Decoder pre-activations (unclipped) for standardised latent rows.
ArrayF decode_batch_raw(const ArrayF& latents, const CodecParams& p);
ArrayF decode_batch(const ArrayF& latents, const CodecParams& p);

LatentFrame encode_frame(const sim::Frame& frame, const CodecParams& p);
sim::Frame decode_frame(const LatentFrame& latent, const CodecParams& p);
LatentFrame latent_from_row(const ArrayF& rows, std::size_t r, const CodecConfig& config);

struct CodecTrainConfig {
  std::size_t epochs = 30;
  std::size_t batch = 64;
  double lr = 1e-3;
  double weight_decay = 0.01;
  std::uint64_t seed = 0;
};

struct CodecTrainResult {
  CodecParams params;
  std::vector<double> epoch_loss;  // mean training loss per epoch
};

/// Reconstruction-MSE training with AdamW over shuffled mini-batches; the
/// latent statistics are refreshed over the training frames at the end.
CodecTrainResult train_codec(const std::vector<const sim::Frame*>& frames, const CodecTrainConfig& cfg,
                             const CodecConfig& config = {});

/// Mean squared reconstruction error of decode(encode(f)) over the frames.
double reconstruction_mse(const std::vector<const sim::Frame*>& frames, const CodecParams& p);

}  // namespace vawm::codec
