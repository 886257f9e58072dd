// Copyright 2026 The vawm Authors
// SPDX-License-Identifier: Apache-2.0

#include "vawm/model/vamodel.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "vawm/rng.hpp"

namespace vawm::model {

using namespace diffcore;

const char* mask_mode_name(MaskMode m) { return m == MaskMode::causal ? "causal" : "bidirectional"; }

MaskMode mask_mode_from_name(const std::string& name) {
  if (name == "causal") return MaskMode::causal;
  if (name == "bidirectional") return MaskMode::bidirectional;
  throw ParameterError("unknown mask mode '" + name + "'");
}

void ModelConfig::validate() const {
  if (d == 0 || heads == 0 || d % heads != 0) throw ParameterError("model width must be a positive multiple of heads");
  if (layers == 0 || m == 0 || k_actions == 0 || l_state == 0) throw ParameterError("model counts must be positive");
  if (!action_only && n_pred == 0) throw ParameterError("n_pred must be positive unless action_only");
  if (l_v() == 0 || latent_c == 0 || ff_mult == 0) throw ParameterError("latent and feed-forward sizes must be positive");
  if (time_features < 2 || time_features % 2 != 0) throw ParameterError("time_features must be even and >= 2");
}

std::vector<Segment> segment_tags(const ModelConfig& c) {
  std::vector<Segment> tags;
  tags.insert(tags.end(), c.l_state, Segment::state);
  tags.insert(tags.end(), c.m * c.l_v(), Segment::hist_vid);
  tags.insert(tags.end(), c.fut_tokens(), Segment::fut_vid);
  tags.insert(tags.end(), c.k_actions, Segment::act);
  return tags;
}

AttentionMask build_mask(MaskMode mode, const std::vector<Segment>& tags) {
  const std::size_t L = tags.size();
  AttentionMask mask{L, L, std::vector<std::uint8_t>(L * L, 1)};
  if (mode == MaskMode::causal) {
    for (std::size_t q = 0; q < L; ++q) {
      if (tags[q] != Segment::fut_vid) continue;
      for (std::size_t k = 0; k < L; ++k) {
        if (tags[k] == Segment::act) mask.allowed[q * L + k] = 0;
      }
    }
  }
  return mask;
}

template <typename T>
void ModelInput<T>::validate(const ModelConfig& c) const {
  const std::size_t B = batch;
  if (B == 0) throw ContractError("model input: empty batch");
  auto expect = [](const NdArray<T>& a, std::size_t rows, std::size_t cols, const char* what) {
    if (a.rank() != 2 || a.dim(0) != rows || a.dim(1) != cols) {
      throw DimensionError(std::string("model input ") + what + ": expected [" + std::to_string(rows) + "x" +
                           std::to_string(cols) + "], got " + shape_str(a.shape()));
    }
  };
  expect(hist_latents, B * c.m * c.l_v(), c.latent_c, "hist_latents");
  expect(state, B, kStateFeatures, "state");
  expect(noisy_actions, B * c.k_actions, kActionFeatures, "noisy_actions");
  if (c.action_only) {
    if (!noisy_latents.empty()) throw DimensionError("model input: action_only model takes no future latents");
  } else {
    expect(noisy_latents, B * c.fut_tokens(), c.latent_c, "noisy_latents");
  }
  if (commands.size() != B || s.size() != B) throw DimensionError("model input: commands/s must have batch entries");
  for (auto cmd : commands) {
    if (cmd >= kCommandVocab) throw ContractError("model input: command id out of range");
  }
  for (double v : s) {
    if (!(v >= 0.0 && v <= 1.0)) throw ParameterError("model input: flow time outside [0, 1]");
  }
}

Normalizer Normalizer::identity(std::size_t k_actions) {
  Normalizer n;
  n.action_mean.assign(k_actions * kActionFeatures, 0.0);
  n.action_std.assign(k_actions * kActionFeatures, 1.0);
  return n;
}

void Normalizer::validate(std::size_t k_actions) const {
  if (state_mean.size() != kStateFeatures || state_std.size() != kStateFeatures ||
      action_mean.size() != k_actions * kActionFeatures || action_std.size() != k_actions * kActionFeatures) {
    throw DimensionError("normalizer sizes do not match the model");
  }
  for (double v : state_std) if (!(v > 0)) throw ParameterError("normalizer: non-positive state std");
  for (double v : action_std) if (!(v > 0)) throw ParameterError("normalizer: non-positive action std");
}

std::vector<double> sinusoid(double s, std::size_t features) {
  const std::size_t half = features / 2;
  std::vector<double> out(features);
  for (std::size_t i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(10000.0) * static_cast<double>(i) / static_cast<double>(half));
    const double arg = 1000.0 * s * freq;
    out[i] = std::cos(arg);
    out[half + i] = std::sin(arg);
  }
  return out;
}

namespace {

template <typename T>
NdArray<T> glorot(std::size_t in, std::size_t out, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(in + out));
  std::uniform_real_distribution<double> u(-a, a);
  NdArray<T> w({in, out});
  for (auto& v : w.values()) v = static_cast<T>(u(rng));
  return w;
}

template <typename T>
NdArray<T> normal(Shape shape, double stddev, Rng& rng) {
  std::normal_distribution<double> n(0.0, stddev);
  NdArray<T> w(std::move(shape));
  for (auto& v : w.values()) v = static_cast<T>(n(rng));
  return w;
}

}  // namespace

template <typename T>
VaModel<T>::VaModel(ModelConfig config, std::uint64_t seed, bool zero_init)
    : config_(config), norm_(Normalizer::identity(config.k_actions)) {
  config_.validate();
  build_parameters(seed, zero_init);
  tags_ = segment_tags(config_);
  mask_ = build_mask(config_.mask_mode, tags_);
}

template <typename T>
VaModel<T>::VaModel(ModelConfig config, ParameterStore<T> params, Normalizer norm)
    : config_(config), norm_(std::move(norm)) {
  config_.validate();
  norm_.validate(config_.k_actions);
  build_parameters(0, true);
  if (params.size() != params_.size()) throw FormatError("model parameters: tensor count mismatch");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params[i].name != params_[i].name || params[i].value.shape() != params_[i].value.shape()) {
      throw FormatError("model parameters: unexpected tensor '" + params[i].name + "' " +
                        shape_str(params[i].value.shape()));
    }
    params_[i].value = params[i].value;
  }
  tags_ = segment_tags(config_);
  mask_ = build_mask(config_.mask_mode, tags_);
}

template <typename T>
std::size_t VaModel<T>::slot(const std::string& name) const {
  return params_.find(name);
}

template <typename T>
void VaModel<T>::build_parameters(std::uint64_t seed, bool zero_init) {
  Rng rng(derive_seed(seed, "model-init"));
  const auto& c = config_;
  const std::size_t d = c.d;
  auto bias = [&](std::size_t n) {
    return zero_init ? NdArray<T>({n}) : normal<T>({n}, 0.1, rng);
  };
  auto lin = [&](const std::string& name, std::size_t in, std::size_t out, bool zero_weight, std::size_t& w,
                 std::size_t& b) {
    w = params_.add(name + ".w", zero_weight && zero_init ? NdArray<T>({in, out}) : glorot<T>(in, out, rng));
    b = params_.add(name + ".b", bias(out));
  };
  lin("lat.proj", c.latent_c, d, false, lat_w_, lat_b_);
  lin("lat.head", d, c.latent_c, true, head_lat_w_, head_lat_b_);
  lin("state.fc1", kStateFeatures, d, false, st_w1_, st_b1_);
  lin("state.fc2", d, c.l_state * d, false, st_w2_, st_b2_);
  lin("act.fc1", kActionFeatures, d, false, act_w1_, act_b1_);
  lin("act.fc2", d, d, false, act_w2_, act_b2_);
  lin("act.readout", d, kActionFeatures, false, act_out_w_, act_out_b_);
  pos_ = params_.add("pos", normal<T>({c.length(), d}, 0.02, rng));
  cmd_ = params_.add("cmd", normal<T>({kCommandVocab, d}, 0.02, rng));
  lin("time.fc1", c.time_features, d, false, time_w1_, time_b1_);
  lin("time.fc2", d, d, false, time_w2_, time_b2_);
  for (std::size_t i = 0; i < c.layers; ++i) {
    const std::string pre = "blk" + std::to_string(i);
    Block b{};
    lin(pre + ".ada", d, 9 * d, true, b.ada_w, b.ada_b);
    lin(pre + ".attn.qkv", d, 3 * d, false, b.qkv_w, b.qkv_b);
    lin(pre + ".attn.out", d, d, false, b.o_w, b.o_b);
    lin(pre + ".cross.q", d, d, false, b.xq_w, b.xq_b);
    lin(pre + ".cross.kv", d, 2 * d, false, b.xkv_w, b.xkv_b);
    lin(pre + ".cross.out", d, d, false, b.xo_w, b.xo_b);
    lin(pre + ".ff.fc1", d, c.ff_mult * d, false, b.ff1_w, b.ff1_b);
    lin(pre + ".ff.fc2", c.ff_mult * d, d, false, b.ff2_w, b.ff2_b);
    blocks_.push_back(b);
  }
  lin("final.ada", d, 2 * d, true, final_ada_w_, final_ada_b_);
}

template <typename T>
Var<T> VaModel<T>::tokenize_latents(Tape<T>& t, Var<T> latents) {
  if (latents.value().rank() != 2 || latents.cols() != config_.latent_c || latents.rows() % config_.l_v() != 0) {
    throw DimensionError("tokenize_latents: expected [n*" + std::to_string(config_.l_v()) + " x " +
                         std::to_string(config_.latent_c) + "], got " + shape_str(latents.shape()));
  }
  return linear<T>(latents, p(t, lat_w_), p(t, lat_b_));
}

template <typename T>
Var<T> VaModel<T>::embed_state(Tape<T>& t, Var<T> state) {
  if (state.cols() != kStateFeatures) throw DimensionError("embed_state: expected 2 features");
  auto h = silu(linear<T>(state, p(t, st_w1_), p(t, st_b1_)));
  auto out = linear<T>(h, p(t, st_w2_), p(t, st_b2_));
  return reshape(out, {state.rows() * config_.l_state, config_.d});
}

template <typename T>
Var<T> VaModel<T>::embed_actions(Tape<T>& t, Var<T> actions) {
  if (actions.cols() != kActionFeatures) throw DimensionError("embed_actions: expected 3 features");
  auto h = silu(linear<T>(actions, p(t, act_w1_), p(t, act_b1_)));
  return linear<T>(h, p(t, act_w2_), p(t, act_b2_));
}

template <typename T>
Var<T> VaModel<T>::readout_actions(Tape<T>& t, Var<T> tokens) {
  return linear<T>(tokens, p(t, act_out_w_), p(t, act_out_b_));
}

template <typename T>
Var<T> VaModel<T>::time_embedding(Tape<T>& t, const std::vector<double>& s) {
  const std::size_t F = config_.time_features;
  NdArray<T> feats({s.size(), F});
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto f = sinusoid(s[i], F);
    for (std::size_t j = 0; j < F; ++j) feats.at(i, j) = static_cast<T>(f[j]);
  }
  auto h = silu(linear<T>(t.constant(std::move(feats)), p(t, time_w1_), p(t, time_b1_)));
  return linear<T>(h, p(t, time_w2_), p(t, time_b2_));
}

template <typename T>
TokenBlocks<T> VaModel<T>::assemble_blocks(Tape<T>& t, const ModelInput<T>& in) {
  const auto& c = config_;
  in.validate(c);
  const std::size_t B = in.batch, LS = c.l_state, LH = c.m * c.l_v(), LF = c.fut_tokens(), K = c.k_actions;
  const Var<T> S = embed_state(t, t.constant(in.state));
  const Var<T> H = tokenize_latents(t, t.constant(in.hist_latents));
  std::vector<std::size_t> cond_idx;
  cond_idx.reserve(B * c.l_cond());
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t i = 0; i < LS; ++i) cond_idx.push_back(b * LS + i);
    for (std::size_t j = 0; j < LH; ++j) cond_idx.push_back(B * LS + b * LH + j);
  }
  const Var<T> cond = gather_rows(concat_rows<T>({S, H}), cond_idx);

  const Var<T> A = embed_actions(t, t.constant(in.noisy_actions));
  std::vector<std::size_t> tgt_idx;
  tgt_idx.reserve(B * c.l_tgt());
  Var<T> target;
  if (LF > 0) {
    const Var<T> F = tokenize_latents(t, t.constant(in.noisy_latents));
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t j = 0; j < LF; ++j) tgt_idx.push_back(b * LF + j);
      for (std::size_t k = 0; k < K; ++k) tgt_idx.push_back(B * LF + b * K + k);
    }
    target = gather_rows(concat_rows<T>({F, A}), tgt_idx);
  } else {
    target = A;
  }
  return TokenBlocks<T>{cond, target, tags_};
}

template <typename T>
ModelOutput<T> VaModel<T>::forward(Tape<T>& t, const ModelInput<T>& in, ForwardTrace<T>* trace) {
  const auto& c = config_;
  const std::size_t B = in.batch, d = c.d, L = c.length(), Lc = c.l_cond(), LF = c.fut_tokens(), K = c.k_actions;
  const TokenBlocks<T> blocks = assemble_blocks(t, in);
  if (trace) trace->cond_input = blocks.cond.value();

  std::vector<std::size_t> seq_idx(B * L), pos_idx(B * L), mod_idx(B * L);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t i = 0; i < L; ++i) {
      const std::size_t r = b * L + i;
      seq_idx[r] = i < Lc ? b * Lc + i : B * Lc + b * c.l_tgt() + (i - Lc);
      pos_idx[r] = i;
      mod_idx[r] = i < Lc ? 0 : 1 + b;  // condition tokens are clean (s = 1)
    }
  }
  Var<T> x = gather_rows(concat_rows<T>({blocks.cond, blocks.target}), seq_idx);
  x = add(x, gather_rows(p(t, pos_), pos_idx));

  std::vector<double> times{1.0};
  times.insert(times.end(), in.s.begin(), in.s.end());
  const Var<T> te = silu(time_embedding(t, times));

  std::vector<std::size_t> cmd_ids(in.commands.begin(), in.commands.end());
  const Var<T> cmd_tokens = gather_rows(p(t, cmd_), cmd_ids);
  const AttentionMask no_mask;
  const T eps = static_cast<T>(1e-6);

  for (const Block& blk : blocks_) {
    const Var<T> mod = gather_rows(linear<T>(te, p(t, blk.ada_w), p(t, blk.ada_b)), mod_idx);
    auto part = [&](std::size_t i) { return slice_cols(mod, i * d, d); };

    Var<T> h = modulate(layer_norm<T>(x, std::nullopt, std::nullopt, eps), part(0), part(1));
    const Var<T> qkv = linear<T>(h, p(t, blk.qkv_w), p(t, blk.qkv_b));
    const Var<T> a = attention(slice_cols(qkv, 0, d), slice_cols(qkv, d, d), slice_cols(qkv, 2 * d, d), c.heads, B, mask_);
    if (trace) trace->self_attention.push_back(a.value());
    x = add(x, mul(part(2), linear<T>(a, p(t, blk.o_w), p(t, blk.o_b))));

    h = modulate(layer_norm<T>(x, std::nullopt, std::nullopt, eps), part(3), part(4));
    const Var<T> xq = linear<T>(h, p(t, blk.xq_w), p(t, blk.xq_b));
    const Var<T> xkv = linear<T>(cmd_tokens, p(t, blk.xkv_w), p(t, blk.xkv_b));
    const Var<T> xa = attention(xq, slice_cols(xkv, 0, d), slice_cols(xkv, d, d), c.heads, B, no_mask);
    x = add(x, mul(part(5), linear<T>(xa, p(t, blk.xo_w), p(t, blk.xo_b))));

    h = modulate(layer_norm<T>(x, std::nullopt, std::nullopt, eps), part(6), part(7));
    const Var<T> ff = linear<T>(silu(linear<T>(h, p(t, blk.ff1_w), p(t, blk.ff1_b))), p(t, blk.ff2_w), p(t, blk.ff2_b));
    x = add(x, mul(part(8), ff));
  }

  const Var<T> fmod = gather_rows(linear<T>(te, p(t, final_ada_w_), p(t, final_ada_b_)), mod_idx);
  const Var<T> h = modulate(layer_norm<T>(x, std::nullopt, std::nullopt, eps), slice_cols(fmod, 0, d), slice_cols(fmod, d, d));

  ModelOutput<T> out;
  if (LF > 0) {
    std::vector<std::size_t> lat_rows;
    lat_rows.reserve(B * LF);
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t j = 0; j < LF; ++j) lat_rows.push_back(b * L + Lc + j);
    out.latent_velocity = linear<T>(gather_rows(h, lat_rows), p(t, head_lat_w_), p(t, head_lat_b_));
  }
  std::vector<std::size_t> act_rows;
  act_rows.reserve(B * K);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t k = 0; k < K; ++k) act_rows.push_back(b * L + Lc + LF + k);
  out.action_velocity = readout_actions(t, gather_rows(h, act_rows));
  return out;
}

template struct ModelInput<float>;
template struct ModelInput<double>;
template class VaModel<float>;
template class VaModel<double>;

}  // namespace vawm::model
