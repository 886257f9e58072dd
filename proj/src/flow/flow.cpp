// Copyright 2026 The vawm Authors
// SPDX-License-Identifier: Apache-2.0

#include "vawm/flow/flow.hpp"

#include <random>

#include "vawm/diffcore/ops.hpp"
#include "vawm/rng.hpp"

namespace vawm::flow {

using namespace diffcore;
using model::kActionFeatures;

template <typename T>
Interpolated<T> interpolate(const NdArray<T>& y0, const NdArray<T>& eps, double s) {
  if (y0.shape() != eps.shape()) {
    throw DimensionError("interpolate: " + shape_str(y0.shape()) + " vs " + shape_str(eps.shape()));
  }
  if (!(s >= 0.0 && s <= 1.0)) throw ParameterError("interpolate: s outside [0, 1]");
  Interpolated<T> out{NdArray<T>(y0.shape()), NdArray<T>(y0.shape())};
  const T a = static_cast<T>(1.0 - s), b = static_cast<T>(s);
  for (std::size_t i = 0; i < y0.size(); ++i) {
    out.y_s[i] = a * eps[i] + b * y0[i];
    out.velocity[i] = y0[i] - eps[i];
  }
  return out;
}

template <typename T>
void draw_noise(FlowBatch<T>& batch, const ModelConfig& config, std::uint64_t seed) {
  const std::size_t B = batch.cond.batch;
  Rng rng(derive_seed(seed, "flow-noise"));
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t lat = config.target_latent_elems(), act = config.target_action_elems();
  if (lat > 0) batch.eps_latents = NdArray<T>({B * config.fut_tokens(), config.latent_c});
  batch.eps_actions = NdArray<T>({B * config.k_actions, kActionFeatures});
  batch.s.assign(B, 0.0);
  for (std::size_t b = 0; b < B; ++b) {
    batch.s[b] = u(rng);
    for (std::size_t i = 0; i < lat; ++i) batch.eps_latents[b * lat + i] = static_cast<T>(n(rng));
    for (std::size_t i = 0; i < act; ++i) batch.eps_actions[b * act + i] = static_cast<T>(n(rng));
  }
}

namespace {

// Row-wise interpolation where row r belongs to sample r / rows_per_sample.
template <typename T>
NdArray<T> interpolate_rows(const NdArray<T>& y0, const NdArray<T>& eps, const std::vector<double>& s,
                            std::size_t per_sample) {
  if (y0.shape() != eps.shape()) throw DimensionError("flow batch: target/noise shape mismatch");
  NdArray<T> out(y0.shape());
  for (std::size_t i = 0; i < y0.size(); ++i) {
    const double sb = s[i / per_sample];
    out[i] = static_cast<T>(1.0 - sb) * eps[i] + static_cast<T>(sb) * y0[i];
  }
  return out;
}

template <typename T>
NdArray<T> difference(const NdArray<T>& a, const NdArray<T>& b) {
  NdArray<T> out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

}  // namespace

template <typename T>
ModelInput<T> noised_input(const FlowBatch<T>& batch) {
  const std::size_t B = batch.cond.batch;
  if (batch.s.size() != B) throw DimensionError("flow batch: need one s per sample");
  ModelInput<T> in;
  in.batch = B;
  in.hist_latents = batch.cond.hist_latents;
  in.state = batch.cond.state;
  in.commands = batch.cond.commands;
  in.s = batch.s;
  if (!batch.y0_latents.empty()) {
    in.noisy_latents = interpolate_rows(batch.y0_latents, batch.eps_latents, batch.s, batch.y0_latents.size() / B);
  }
  in.noisy_actions = interpolate_rows(batch.y0_actions, batch.eps_actions, batch.s, batch.y0_actions.size() / B);
  return in;
}

template <typename T>
Var<T> fm_loss_from_output(Tape<T>& t, const model::ModelOutput<T>& out, const FlowBatch<T>& batch, double lambda_act) {
  const NdArray<T> v_act = difference(batch.y0_actions, batch.eps_actions);
  const std::size_t n_act = v_act.size();
  Var<T> total = weighted_sse(out.action_velocity, t.constant(v_act), NdArray<T>(v_act.shape(), static_cast<T>(lambda_act)));
  std::size_t n = n_act;
  if (!batch.y0_latents.empty()) {
    if (out.latent_velocity.tape == nullptr) throw ContractError("fm_loss: model emitted no latent velocity");
    const NdArray<T> v_lat = difference(batch.y0_latents, batch.eps_latents);
    total = add(total, weighted_sse(out.latent_velocity, t.constant(v_lat), NdArray<T>(v_lat.shape(), T(1))));
    n += v_lat.size();
  }
  return scale(total, static_cast<T>(1.0 / static_cast<double>(n)));
}

template <typename T>
Var<T> fm_loss(Tape<T>& t, VaModel<T>& model, const FlowBatch<T>& batch, double lambda_act) {
  if (batch.cond.batch == 0) throw ContractError("fm_loss: empty batch");
  return fm_loss_from_output(t, model.forward(t, noised_input(batch)), batch, lambda_act);
}

template <typename T>
Var<T> training_loss(Tape<T>& t, VaModel<T>& model, const FlowBatch<T>& batch, const LossConfig& cfg) {
  if (batch.cond.batch == 0) throw ContractError("training_loss: empty batch");
  const ModelInput<T> in = noised_input(batch);
  const auto out = model.forward(t, in);
  Var<T> loss = fm_loss_from_output(t, out, batch, cfg.lambda_act);
  const std::size_t K = model.config().k_actions;
  if (cfg.aux_regression) {
    // One-step estimate of the clean actions: y_s + (1 - s) v.
    NdArray<T> w(in.noisy_actions.shape());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = static_cast<T>(1.0 - batch.s[i / (K * kActionFeatures)]);
    const Var<T> denoised = add(t.constant(in.noisy_actions), mul(out.action_velocity, t.constant(w)));
    const Var<T> reg = mean(square(sub(denoised, t.constant(batch.y0_actions))));
    loss = add(loss, scale(reg, static_cast<T>(cfg.aux_weight)));
  }
  if (cfg.action_ae_weight > 0.0) {
    const Var<T> clean = t.constant(batch.y0_actions);
    const Var<T> rec = model.readout_actions(t, model.embed_actions(t, clean));
    loss = add(loss, scale(mean(square(sub(rec, clean))), static_cast<T>(cfg.action_ae_weight)));
  }
  return loss;
}

template <typename T>
Targets<T> euler_integrate(const VelocityFn<T>& v, Targets<T> y, std::size_t steps,
                           const std::function<void(Targets<T>&, double)>& after_step) {
  if (steps == 0) throw ParameterError("sampler: steps must be >= 1");
  const T h = static_cast<T>(1.0 / static_cast<double>(steps));
  for (std::size_t k = 0; k < steps; ++k) {
    const double s = static_cast<double>(k) / static_cast<double>(steps);
    const Targets<T> vel = v(y, s);
    if (vel.latents.shape() != y.latents.shape() || vel.actions.shape() != y.actions.shape()) {
      throw DimensionError("sampler: velocity shape does not match the target block");
    }
    for (std::size_t i = 0; i < y.latents.size(); ++i) y.latents[i] += h * vel.latents[i];
    for (std::size_t i = 0; i < y.actions.size(); ++i) y.actions[i] += h * vel.actions[i];
    if (after_step) after_step(y, static_cast<double>(k + 1) / static_cast<double>(steps));
  }
  return y;
}

template <typename T>
Targets<T> initial_noise(const ModelConfig& config, std::size_t batch, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "sampler-noise"));
  std::normal_distribution<double> n(0.0, 1.0);
  Targets<T> y;
  const std::size_t lat = config.target_latent_elems(), act = config.target_action_elems();
  if (lat > 0) y.latents = NdArray<T>({batch * config.fut_tokens(), config.latent_c});
  y.actions = NdArray<T>({batch * config.k_actions, kActionFeatures});
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t i = 0; i < lat; ++i) y.latents[b * lat + i] = static_cast<T>(n(rng));
    for (std::size_t i = 0; i < act; ++i) y.actions[b * act + i] = static_cast<T>(n(rng));
  }
  return y;
}

template <typename T>
VelocityFn<T> model_velocity(VaModel<T>& model, const Condition<T>& cond) {
  return [&model, &cond](const Targets<T>& y, double s) {
    ModelInput<T> in;
    in.batch = cond.batch;
    in.hist_latents = cond.hist_latents;
    in.state = cond.state;
    in.commands = cond.commands;
    in.noisy_latents = y.latents;
    in.noisy_actions = y.actions;
    in.s.assign(cond.batch, s);
    Tape<T> t;
    const auto out = model.forward(t, in);
    Targets<T> v;
    if (!y.latents.empty()) v.latents = out.latent_velocity.value();
    v.actions = out.action_velocity.value();
    return v;
  };
}

template <typename T>
Targets<T> sample(VaModel<T>& model, const Condition<T>& cond, const SamplerConfig& cfg) {
  return euler_integrate<T>(model_velocity(model, cond), initial_noise<T>(model.config(), cond.batch, cfg.seed), cfg.steps);
}

template <typename T>
Targets<T> sample_actions_given_video(VaModel<T>& model, const Condition<T>& cond, const NdArray<T>& video,
                                      const SamplerConfig& cfg) {
  if (model.config().action_only) throw ContractError("clamped sampling needs a joint model");
  Targets<T> init = initial_noise<T>(model.config(), cond.batch, cfg.seed);
  if (video.shape() != init.latents.shape()) throw DimensionError("clamped sampling: video shape mismatch");
  const NdArray<T> eps = init.latents;
  auto clamp = [&](Targets<T>& y, double s) {
    for (std::size_t i = 0; i < eps.size(); ++i) y.latents[i] = static_cast<T>(1.0 - s) * eps[i] + static_cast<T>(s) * video[i];
  };
  return euler_integrate<T>(model_velocity(model, cond), std::move(init), cfg.steps, clamp);
}

template <typename T>
SplitTargets<T> split_targets(const std::vector<T>& flat, const ModelConfig& config) {
  if (flat.size() != config.target_elems()) {
    throw DimensionError("split_targets: expected " + std::to_string(config.target_elems()) + " values, got " +
                         std::to_string(flat.size()));
  }
  SplitTargets<T> out;
  const std::size_t per = config.latent_size();
  const std::size_t frames = config.action_only ? 0 : config.n_pred;
  for (std::size_t f = 0; f < frames; ++f) out.latents.emplace_back(flat.begin() + f * per, flat.begin() + (f + 1) * per);
  const std::size_t off = frames * per;
  for (std::size_t k = 0; k < config.k_actions; ++k) {
    out.actions.push_back({flat[off + 3 * k], flat[off + 3 * k + 1], flat[off + 3 * k + 2]});
  }
  return out;
}

template <typename T>
std::vector<T> join_targets(const SplitTargets<T>& parts, const ModelConfig& config) {
  const std::size_t frames = config.action_only ? 0 : config.n_pred;
  if (parts.latents.size() != frames || parts.actions.size() != config.k_actions) {
    throw DimensionError("join_targets: layout mismatch");
  }
  std::vector<T> flat;
  flat.reserve(config.target_elems());
  for (const auto& l : parts.latents) {
    if (l.size() != config.latent_size()) throw DimensionError("join_targets: latent size mismatch");
    flat.insert(flat.end(), l.begin(), l.end());
  }
  for (const auto& a : parts.actions) flat.insert(flat.end(), a.begin(), a.end());
  return flat;
}

template <typename T>
std::vector<T> flatten_sample(const Targets<T>& y, std::size_t b, const ModelConfig& config) {
  const std::size_t lat = config.target_latent_elems(), act = config.target_action_elems();
  std::vector<T> flat;
  flat.reserve(lat + act);
  if (lat > 0) flat.insert(flat.end(), y.latents.ptr() + b * lat, y.latents.ptr() + (b + 1) * lat);
  flat.insert(flat.end(), y.actions.ptr() + b * act, y.actions.ptr() + (b + 1) * act);
  return flat;
}

#define VAWM_FLOW_INSTANTIATE(T)                                                                                   \
  template Interpolated<T> interpolate(const NdArray<T>&, const NdArray<T>&, double);                             \
  template void draw_noise(FlowBatch<T>&, const ModelConfig&, std::uint64_t);                                     \
  template ModelInput<T> noised_input(const FlowBatch<T>&);                                                       \
  template Var<T> fm_loss_from_output(Tape<T>&, const model::ModelOutput<T>&, const FlowBatch<T>&, double);       \
  template Var<T> fm_loss(Tape<T>&, VaModel<T>&, const FlowBatch<T>&, double);                                    \
  template Var<T> training_loss(Tape<T>&, VaModel<T>&, const FlowBatch<T>&, const LossConfig&);                   \
  template Targets<T> euler_integrate(const VelocityFn<T>&, Targets<T>, std::size_t,                              \
                                      const std::function<void(Targets<T>&, double)>&);                          \
  template Targets<T> initial_noise(const ModelConfig&, std::size_t, std::uint64_t);                              \
  template VelocityFn<T> model_velocity(VaModel<T>&, const Condition<T>&);                                        \
  template Targets<T> sample(VaModel<T>&, const Condition<T>&, const SamplerConfig&);                             \
  template Targets<T> sample_actions_given_video(VaModel<T>&, const Condition<T>&, const NdArray<T>&,             \
                                                 const SamplerConfig&);                                           \
  template SplitTargets<T> split_targets(const std::vector<T>&, const ModelConfig&);                              \
  template std::vector<T> join_targets(const SplitTargets<T>&, const ModelConfig&);                               \
  template std::vector<T> flatten_sample(const Targets<T>&, std::size_t, const ModelConfig&);

VAWM_FLOW_INSTANTIATE(float)
VAWM_FLOW_INSTANTIATE(double)

}  // namespace vawm::flow
