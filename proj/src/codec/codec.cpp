// Copyright 2026 The vawm Authors
// SPDX-License-Identifier: Apache-2.0

#include "vawm/codec/codec.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "vawm/diffcore/ops.hpp"
#include "vawm/diffcore/optim.hpp"
#include "vawm/rng.hpp"

namespace vawm::codec {

using namespace diffcore;

namespace {

enum Slot : std::size_t { kEncW1, kEncB1, kEncW2, kEncB2, kDecW1, kDecB1, kDecW2, kDecB2 };

ArrayF glorot(std::size_t in, std::size_t out, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(in + out));
  std::uniform_real_distribution<double> u(-a, a);
  ArrayF w({in, out});
  for (auto& v : w.values()) v = static_cast<float>(u(rng));
  return w;
}

Var<float> encoder_raw(Tape<float>& t, Var<float> x, ParameterStore<float>& w) {
  auto h = silu(linear<float>(x, t.param(w[kEncW1]), t.param(w[kEncB1])));
  return tanh(linear<float>(h, t.param(w[kEncW2]), t.param(w[kEncB2])));
}

Var<float> decoder_raw(Tape<float>& t, Var<float> z, ParameterStore<float>& w) {
  auto h = silu(linear<float>(z, t.param(w[kDecW1]), t.param(w[kDecB1])));
  return linear<float>(h, t.param(w[kDecW2]), t.param(w[kDecB2]));
}

// Forward-only evaluation through a throwaway tape on a copy of the weights,
// so encode/decode never touch shared gradient buffers.
ArrayF eval_encoder_raw(const ArrayF& x, const CodecParams& p) {
  ParameterStore<float> w = p.weights.cast<float>();
  Tape<float> t;
  return encoder_raw(t, t.constant(x), w).value();
}

void check_rows(const ArrayF& a, std::size_t cols, const char* what) {
  if (a.rank() != 2 || a.cols() != cols) {
    throw DimensionError(std::string(what) + ": expected [n x " + std::to_string(cols) + "], got " +
                         shape_str(a.shape()));
  }
}

}  // namespace

CodecParams init_codec(const CodecConfig& config, std::uint64_t seed) {
  if (config.pixels() == 0 || config.latent_size() == 0 || config.hidden == 0) {
    throw ParameterError("init_codec: empty dimensions");
  }
  Rng rng(derive_seed(seed, "codec-init"));
  CodecParams p;
  p.config = config;
  const std::size_t P = config.pixels(), H = config.hidden, Z = config.latent_size();
  p.weights.add("codec.enc.w1", glorot(P, H, rng));
  p.weights.add("codec.enc.b1", ArrayF({H}));
  p.weights.add("codec.enc.w2", glorot(H, Z, rng));
  p.weights.add("codec.enc.b2", ArrayF({Z}));
  p.weights.add("codec.dec.w1", glorot(Z, H, rng));
  p.weights.add("codec.dec.b1", ArrayF({H}));
  p.weights.add("codec.dec.w2", glorot(H, P, rng));
  p.weights.add("codec.dec.b2", ArrayF({P}));
  p.latent_mean.assign(Z, 0.0f);
  p.latent_std.assign(Z, 1.0f);
  return p;
}

void validate_codec(const CodecParams& p) {
  const auto& c = p.config;
  const std::size_t P = c.pixels(), H = c.hidden, Z = c.latent_size();
  const std::vector<Shape> expected = {{P, H}, {H}, {H, Z}, {Z}, {Z, H}, {H}, {H, P}, {P}};
  if (p.weights.size() != expected.size()) throw ContractError("codec: wrong number of weight tensors");
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (p.weights[i].value.shape() != expected[i]) {
      throw DimensionError("codec: tensor " + p.weights[i].name + " has shape " +
                           shape_str(p.weights[i].value.shape()) + ", expected " + shape_str(expected[i]));
    }
  }
  if (p.latent_mean.size() != Z || p.latent_std.size() != Z) throw DimensionError("codec: latent statistics size");
}

ArrayF frames_to_array(const std::vector<const sim::Frame*>& frames, const CodecConfig& config) {
  if (frames.empty()) throw ContractError("frames_to_array: no frames");
  ArrayF out({frames.size(), config.pixels()});
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto& f = *frames[i];
    if (f.height != config.frame_h || f.width != config.frame_w) {
      throw DimensionError("codec: frame is " + std::to_string(f.height) + "x" + std::to_string(f.width) +
                           ", codec expects " + std::to_string(config.frame_h) + "x" + std::to_string(config.frame_w));
    }
    std::copy(f.cells.begin(), f.cells.end(), out.ptr() + i * config.pixels());
  }
  return out;
}

ArrayF encode_batch(const ArrayF& pixels, const CodecParams& p) {
  check_rows(pixels, p.config.pixels(), "encode");
  ArrayF z = eval_encoder_raw(pixels, p);
  const std::size_t Z = p.config.latent_size();
  for (std::size_t r = 0; r < z.rows(); ++r) {
    for (std::size_t j = 0; j < Z; ++j) z.at(r, j) = (z.at(r, j) - p.latent_mean[j]) / p.latent_std[j];
  }
  return z;
}

ArrayF decode_batch_raw(const ArrayF& latents, const CodecParams& p) {
  const std::size_t Z = p.config.latent_size();
  check_rows(latents, Z, "decode");
  ArrayF z = latents;
  for (std::size_t r = 0; r < z.rows(); ++r) {
    for (std::size_t j = 0; j < Z; ++j) z.at(r, j) = z.at(r, j) * p.latent_std[j] + p.latent_mean[j];
  }
  ParameterStore<float> w = p.weights.cast<float>();
  Tape<float> t;
  return decoder_raw(t, t.constant(z), w).value();
}

ArrayF decode_batch(const ArrayF& latents, const CodecParams& p) {
  ArrayF y = decode_batch_raw(latents, p);
  for (auto& v : y.values()) v = std::clamp(v, 0.0f, 1.0f);
  return y;
}

LatentFrame latent_from_row(const ArrayF& rows, std::size_t r, const CodecConfig& config) {
  LatentFrame l;
  l.h = config.latent_h;
  l.w = config.latent_w;
  l.c = config.latent_c;
  l.values.assign(rows.ptr() + r * rows.cols(), rows.ptr() + (r + 1) * rows.cols());
  return l;
}

LatentFrame encode_frame(const sim::Frame& frame, const CodecParams& p) {
  return latent_from_row(encode_batch(frames_to_array({&frame}, p.config), p), 0, p.config);
}

sim::Frame decode_frame(const LatentFrame& latent, const CodecParams& p) {
  const auto& c = p.config;
  if (latent.h != c.latent_h || latent.w != c.latent_w || latent.c != c.latent_c ||
      latent.values.size() != c.latent_size()) {
    throw DimensionError("decode_frame: latent shape does not match the codec");
  }
  const ArrayF y = decode_batch(ArrayF({1, c.latent_size()}, latent.values), p);
  sim::Frame f;
  f.height = c.frame_h;
  f.width = c.frame_w;
  f.cells = y.values();
  return f;
}

CodecTrainResult train_codec(const std::vector<const sim::Frame*>& frames, const CodecTrainConfig& cfg,
                             const CodecConfig& config) {
  if (frames.empty()) throw ContractError("train_codec: empty dataset");
  if (cfg.batch == 0) throw ParameterError("train_codec: batch must be positive");
  const ArrayF data = frames_to_array(frames, config);
  CodecTrainResult out{init_codec(config, cfg.seed), {}};
  CodecParams& p = out.params;
  auto opt = make_adamw_state(p.weights, AdamWConfig{cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay});
  Rng rng(derive_seed(cfg.seed, "codec-shuffle"));
  const std::size_t n = data.rows(), P = config.pixels();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t start = 0; start < n; start += cfg.batch) {
      const std::size_t b = std::min(cfg.batch, n - start);
      ArrayF x({b, P});
      for (std::size_t i = 0; i < b; ++i) std::copy_n(data.ptr() + order[start + i] * P, P, x.ptr() + i * P);
      p.weights.zero_grad();
      Tape<float> t;
      const auto xin = t.constant(x);
      const auto loss = mean(square(sub(decoder_raw(t, encoder_raw(t, xin, p.weights), p.weights), xin)));
      total += static_cast<double>(loss.value().item()) * static_cast<double>(b);
      t.backward(loss);
      adamw_step(p.weights, opt, cfg.lr);
    }
    out.epoch_loss.push_back(total / static_cast<double>(n));
  }
  p.epochs = cfg.epochs;

  // Latent statistics over the training frames.
  const ArrayF z = eval_encoder_raw(data, p);
  const std::size_t Z = config.latent_size();
  std::vector<double> mu(Z, 0.0), var(Z, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t j = 0; j < Z; ++j) mu[j] += z.at(r, j);
  for (auto& m : mu) m /= static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t j = 0; j < Z; ++j) var[j] += (z.at(r, j) - mu[j]) * (z.at(r, j) - mu[j]);
  for (std::size_t j = 0; j < Z; ++j) {
    p.latent_mean[j] = static_cast<float>(mu[j]);
    p.latent_std[j] = static_cast<float>(std::max(std::sqrt(var[j] / static_cast<double>(n)), 1e-3));
  }
  p.final_loss = reconstruction_mse(frames, p);
  return out;
}

double reconstruction_mse(const std::vector<const sim::Frame*>& frames, const CodecParams& p) {
  const ArrayF x = frames_to_array(frames, p.config);
  const ArrayF y = decode_batch(encode_batch(x, p), p);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (static_cast<double>(y[i]) - x[i]) * (static_cast<double>(y[i]) - x[i]);
  return s / static_cast<double>(x.size());
}

}  // namespace vawm::codec
