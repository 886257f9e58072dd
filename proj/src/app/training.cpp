// Copyright 2026 The vawm Authors
// SPDX-License-Identifier: Apache-2.0

#include "vawm/app/training.hpp"

#include <cmath>

#include "vawm/diffcore/optim.hpp"
#include "vawm/error.hpp"
#include "vawm/rng.hpp"

namespace vawm::app {

using diffcore::ArrayF;

WindowSet build_windows(const std::vector<sim::Episode>& episodes, const codec::CodecParams& codec,
                        const model::ModelConfig& config) {
  WindowSet w;
  w.config = config;
  const std::size_t Z = codec.config.latent_size();
  if (Z != config.latent_size()) throw DimensionError("build_windows: codec latent size differs from the model");
  const std::size_t K = config.k_actions;
  for (const auto& e : episodes) {
    const auto windows = sim::slice_windows(e, config.m, config.n_pred, K);
    if (windows.empty()) continue;
    std::vector<const sim::Frame*> frames;
    for (const auto& f : e.frames) frames.push_back(&f);
    const ArrayF lat = codec::encode_batch(codec::frames_to_array(frames, codec.config), codec);
    for (const auto& win : windows) {
      for (std::size_t i : win.history) w.hist.insert(w.hist.end(), lat.ptr() + i * Z, lat.ptr() + (i + 1) * Z);
      for (std::size_t i : win.future) w.future.insert(w.future.end(), lat.ptr() + i * Z, lat.ptr() + (i + 1) * Z);
      w.state.push_back(static_cast<float>(win.state.vx));
      w.state.push_back(static_cast<float>(win.state.vy));
      for (const auto& a : win.actions) {
        w.actions.push_back(static_cast<float>(a.x));
        w.actions.push_back(static_cast<float>(a.y));
        w.actions.push_back(static_cast<float>(a.yaw));
      }
      w.commands.push_back(static_cast<std::uint8_t>(win.command));
      ++w.count;
    }
  }
  return w;
}

model::Normalizer fit_normalizer(const WindowSet& w, double min_std) {
  if (w.count == 0) throw ContractError("fit_normalizer: no windows");
  const std::size_t K = w.config.k_actions;
  auto stats = [&](const std::vector<float>& v, std::size_t stride, std::size_t j) {
    double s = 0, ss = 0;
    for (std::size_t i = 0; i < w.count; ++i) s += v[i * stride + j];
    const double mean = s / static_cast<double>(w.count);
    for (std::size_t i = 0; i < w.count; ++i) ss += (v[i * stride + j] - mean) * (v[i * stride + j] - mean);
    const double sd = std::max(min_std, std::sqrt(ss / static_cast<double>(w.count)));
    return std::pair<double, double>{static_cast<float>(mean), static_cast<float>(sd)};
  };
  model::Normalizer n;
  for (std::size_t j = 0; j < 2; ++j) std::tie(n.state_mean[j], n.state_std[j]) = stats(w.state, 2, j);
  n.action_mean.resize(K * 3);
  n.action_std.resize(K * 3);
  for (std::size_t j = 0; j < K * 3; ++j) std::tie(n.action_mean[j], n.action_std[j]) = stats(w.actions, K * 3, j);
  return n;
}

flow::FlowBatch<float> make_batch(const WindowSet& w, const model::Normalizer& norm, const std::vector<std::size_t>& idx,
                                  std::uint64_t noise_seed) {
  const auto& c = w.config;
  const std::size_t B = idx.size(), Z = c.latent_size(), K = c.k_actions;
  const std::size_t HZ = c.m * Z, FZ = c.n_pred * Z;
  flow::FlowBatch<float> b;
  b.cond.batch = B;
  b.cond.hist_latents = ArrayF({B * c.m * c.l_v(), c.latent_c});
  b.cond.state = ArrayF({B, 2});
  b.y0_actions = ArrayF({B * K, 3});
  if (!c.action_only) b.y0_latents = ArrayF({B * c.fut_tokens(), c.latent_c});
  for (std::size_t r = 0; r < B; ++r) {
    const std::size_t i = idx[r];
    if (i >= w.count) throw ContractError("make_batch: window index out of range");
    std::copy_n(w.hist.begin() + i * HZ, HZ, b.cond.hist_latents.ptr() + r * HZ);
    if (!c.action_only) std::copy_n(w.future.begin() + i * FZ, FZ, b.y0_latents.ptr() + r * FZ);
    for (std::size_t j = 0; j < 2; ++j) {
      b.cond.state.at(r, j) = static_cast<float>((w.state[i * 2 + j] - norm.state_mean[j]) / norm.state_std[j]);
    }
    for (std::size_t j = 0; j < K * 3; ++j) {
      b.y0_actions[r * K * 3 + j] = static_cast<float>((w.actions[i * K * 3 + j] - norm.action_mean[j]) / norm.action_std[j]);
    }
    b.cond.commands.push_back(w.commands[i]);
  }
  flow::draw_noise(b, c, noise_seed);
  return b;
}

namespace {

ArrayF slice_rows(const ArrayF& a, std::size_t per_sample, std::size_t lo, std::size_t n) {
  if (a.size() == 0) return a;
  ArrayF out({n * per_sample, a.cols()});
  std::copy_n(a.ptr() + lo * per_sample * a.cols(), out.size(), out.ptr());
  return out;
}

flow::FlowBatch<float> slice_batch(const flow::FlowBatch<float>& b, const model::ModelConfig& c, std::size_t lo,
                                   std::size_t n) {
  flow::FlowBatch<float> out;
  out.cond.batch = n;
  out.cond.hist_latents = slice_rows(b.cond.hist_latents, c.m * c.l_v(), lo, n);
  out.cond.state = slice_rows(b.cond.state, 1, lo, n);
  out.cond.commands.assign(b.cond.commands.begin() + lo, b.cond.commands.begin() + lo + n);
  out.y0_latents = slice_rows(b.y0_latents, c.fut_tokens(), lo, n);
  out.eps_latents = slice_rows(b.eps_latents, c.fut_tokens(), lo, n);
  out.y0_actions = slice_rows(b.y0_actions, c.k_actions, lo, n);
  out.eps_actions = slice_rows(b.eps_actions, c.k_actions, lo, n);
  out.s.assign(b.s.begin() + lo, b.s.begin() + lo + n);
  return out;
}

}  // namespace

std::vector<double> train_model(model::VaModel<float>& model, const WindowSet& windows, const TrainConfig& cfg,
                                const TrainHooks& hooks) {
  if (windows.count == 0) throw ContractError("train_model: no training windows");
  if (!(model.config() == windows.config)) throw ContractError("train_model: window layout differs from the model");
  const std::size_t micro = cfg.micro_batch == 0 ? cfg.batch : cfg.micro_batch;
  if (cfg.batch == 0 || cfg.batch % micro != 0) throw ParameterError("train_model: batch must be a multiple of micro_batch");
  auto state = diffcore::make_adamw_state(model.params(), diffcore::AdamWConfig{cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay});
  std::vector<double> curve;
  curve.reserve(cfg.steps);
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    Rng rng(derive_seed(cfg.seed, "batch", step));
    std::uniform_int_distribution<std::size_t> pick(0, windows.count - 1);
    std::vector<std::size_t> idx(cfg.batch);
    for (auto& i : idx) i = pick(rng);
    model.params().zero_grad();
    double loss = 0.0;
    const auto full = make_batch(windows, model.normalizer(), idx, derive_seed(cfg.seed, "noise", step * 1024));
    for (std::size_t off = 0; off < cfg.batch; off += micro) {
      const auto batch = micro == cfg.batch ? full : slice_batch(full, model.config(), off, micro);
      diffcore::Tape<float> t;
      auto l = flow::training_loss(t, model, batch, cfg.loss);
      const float w = static_cast<float>(micro) / static_cast<float>(cfg.batch);
      l = diffcore::scale(l, w);
      loss += l.value().item();
      t.backward(l);
    }
    if (!std::isfinite(loss)) throw NonFiniteError("training diverged at step " + std::to_string(step));
    const double lr = diffcore::warmup_lr(cfg.lr, step, cfg.warmup_steps);
    diffcore::adamw_step(model.params(), state, lr);
    curve.push_back(loss);
    if (hooks.on_step) hooks.on_step({step, loss, lr});
    const bool last = step + 1 == cfg.steps;
    if (hooks.on_checkpoint && (last || (cfg.checkpoint_every > 0 && (step + 1) % cfg.checkpoint_every == 0))) {
      hooks.on_checkpoint(step + 1, model);
    }
  }
  return curve;
}

std::vector<const sim::Frame*> all_frames(const std::vector<sim::Episode>& episodes) {
  std::vector<const sim::Frame*> out;
  for (const auto& e : episodes)
    for (const auto& f : e.frames) out.push_back(&f);
  return out;
}

Bundle train_bundle(const RunConfig& config, const std::vector<sim::Episode>& episodes, const TrainHooks& hooks,
                    std::vector<double>* loss_curve, const codec::CodecParams* pretrained_codec) {
  config.validate();
  Bundle b;
  b.config = config;
  if (pretrained_codec) {
    b.codec = *pretrained_codec;
  } else {
    b.codec = codec::train_codec(all_frames(episodes), config.codec_train, config.codec).params;
  }
  const WindowSet windows = build_windows(episodes, b.codec, config.model);
  b.model = std::make_unique<model::VaModel<float>>(config.model, derive_seed(config.train.seed, "model-init"));
  b.model->normalizer() = fit_normalizer(windows);
  auto curve = train_model(*b.model, windows, config.train, hooks);
  b.step = config.train.steps;
  if (loss_curve) *loss_curve = std::move(curve);
  return b;
}

}  // namespace vawm::app
