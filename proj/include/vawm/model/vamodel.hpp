// Copyright 2026 The vawm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "vawm/diffcore/ops.hpp"
#include "vawm/diffcore/tape.hpp"

namespace vawm::model {

using diffcore::AttentionMask;
using diffcore::NdArray;
using diffcore::ParameterStore;
using diffcore::Tape;
using diffcore::Var;

enum class MaskMode : std::uint8_t { bidirectional, causal };
enum class Segment : std::uint8_t { state, hist_vid, fut_vid, act };

const char* mask_mode_name(MaskMode m);
MaskMode mask_mode_from_name(const std::string& name);

inline constexpr std::size_t kStateFeatures = 2;   // vx, vy
inline constexpr std::size_t kActionFeatures = 3;  // x, y, yaw
inline constexpr std::size_t kCommandVocab = 4;

struct ModelConfig {
  std::size_t d = 64;
  std::size_t layers = 4;
  std::size_t heads = 4;
  std::size_t m = 4;
  std::size_t n_pred = 8;
  std::size_t k_actions = 8;
  std::size_t l_state = 1;
  std::size_t latent_h = 4;
  std::size_t latent_w = 4;
  std::size_t latent_c = 4;
  std::size_t ff_mult = 4;
  std::size_t time_features = 32;
  MaskMode mask_mode = MaskMode::bidirectional;
  bool action_only = false;

  std::size_t l_v() const { return latent_h * latent_w; }
  std::size_t l_cond() const { return l_state + m * l_v(); }
  std::size_t fut_tokens() const { return action_only ? 0 : n_pred * l_v(); }
  std::size_t l_tgt() const { return fut_tokens() + k_actions; }
  std::size_t length() const { return l_cond() + l_tgt(); }
  std::size_t latent_size() const { return l_v() * latent_c; }
  /// Elements of one sample's target block in data space.
  std::size_t target_latent_elems() const { return fut_tokens() * latent_c; }
  std::size_t target_action_elems() const { return k_actions * kActionFeatures; }
  std::size_t target_elems() const { return target_latent_elems() + target_action_elems(); }

  void validate() const;  // throws ParameterError
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Segment tag of every position of one sample's [cond, target] sequence.
std::vector<Segment> segment_tags(const ModelConfig& c);

/// Boolean mask over one sample's sequence. Causal mode blocks only
/// (FUT_VID query, ACT key) pairs.
AttentionMask build_mask(MaskMode mode, const std::vector<Segment>& tags);

/// Model inputs for a batch of B samples, all in data space: latents are
/// standardised codec latents, states and actions are normalised with the
/// model's statistics (see Normalizer).
template <typename T>
struct ModelInput {
  std::size_t batch = 0;
  NdArray<T> hist_latents;   // [B*m*L_V x c], samples then frames then raster order
  NdArray<T> state;          // [B x 2]
  std::vector<std::uint8_t> commands;  // B ids
  NdArray<T> noisy_latents;  // [B*n_pred*L_V x c]; empty when action_only
  NdArray<T> noisy_actions;  // [B*K x 3]
  std::vector<double> s;     // flow time per sample

  void validate(const ModelConfig& c) const;
};

template <typename T>
struct TokenBlocks {
  Var<T> cond;    // [B*L_cond x d]
  Var<T> target;  // [B*L_tgt x d]
  std::vector<Segment> tags;  // per position of one sample
};

template <typename T>
struct ModelOutput {
  Var<T> latent_velocity;  // [B*n_pred*L_V x c]; unset (tape null) when action_only
  Var<T> action_velocity;  // [B*K x 3]
};

/// Optional capture of per-layer self-attention outputs for inspection.
template <typename T>
struct ForwardTrace {
  std::vector<NdArray<T>> self_attention;
  NdArray<T> cond_input;
};

/// Per-feature affine normalisation of states and actions.
struct Normalizer {
  std::vector<double> state_mean{0.0, 0.0};
  std::vector<double> state_std{1.0, 1.0};
  std::vector<double> action_mean;  // K*3, indexed k*3 + j
  std::vector<double> action_std;

  static Normalizer identity(std::size_t k_actions);
  void validate(std::size_t k_actions) const;
  friend bool operator==(const Normalizer&, const Normalizer&) = default;
};

/// Diffusion-transformer velocity model over [condition, target] tokens with
/// flow-time adaptive normalisation and command cross-attention.
template <typename T>
class VaModel {
 public:
  /// `zero_init` zero-initialises the modulation projections (adaLN-zero);
  /// disable it to exercise every path from the first step.
  VaModel(ModelConfig config, std::uint64_t seed, bool zero_init = true);
  VaModel(ModelConfig config, ParameterStore<T> params, Normalizer norm);

  const ModelConfig& config() const { return config_; }
  ParameterStore<T>& params() { return params_; }
  const ParameterStore<T>& params() const { return params_; }
  Normalizer& normalizer() { return norm_; }
  const Normalizer& normalizer() const { return norm_; }

  /// Raster-flattened latents [n*L_V x c] -> projected tokens [n*L_V x d].
  Var<T> tokenize_latents(Tape<T>& t, Var<T> latents);
  /// [B x 2] -> [B*L_S x d].
  Var<T> embed_state(Tape<T>& t, Var<T> state);
  /// [n x 3] -> [n x d].
  Var<T> embed_actions(Tape<T>& t, Var<T> actions);
  /// Action readout head [n x d] -> [n x 3].
  Var<T> readout_actions(Tape<T>& t, Var<T> tokens);
  /// Flow-time embedding for each s, [n x d].
  Var<T> time_embedding(Tape<T>& t, const std::vector<double>& s);

  TokenBlocks<T> assemble_blocks(Tape<T>& t, const ModelInput<T>& in);
  ModelOutput<T> forward(Tape<T>& t, const ModelInput<T>& in, ForwardTrace<T>* trace = nullptr);

  const AttentionMask& mask() const { return mask_; }

 private:
  void build_parameters(std::uint64_t seed, bool zero_init);
  std::size_t slot(const std::string& name) const;
  Var<T> p(Tape<T>& t, std::size_t i) { return t.param(params_[i]); }

  ModelConfig config_;
  ParameterStore<T> params_;
  Normalizer norm_;
  std::vector<Segment> tags_;
  AttentionMask mask_;

  // Parameter slots.
  std::size_t lat_w_, lat_b_, head_lat_w_, head_lat_b_;
  std::size_t st_w1_, st_b1_, st_w2_, st_b2_;
  std::size_t act_w1_, act_b1_, act_w2_, act_b2_, act_out_w_, act_out_b_;
  std::size_t pos_, cmd_;
  std::size_t time_w1_, time_b1_, time_w2_, time_b2_;
  std::size_t final_ada_w_, final_ada_b_;
  struct Block {
    std::size_t ada_w, ada_b, qkv_w, qkv_b, o_w, o_b;
    std::size_t xq_w, xq_b, xkv_w, xkv_b, xo_w, xo_b;
    std::size_t ff1_w, ff1_b, ff2_w, ff2_b;
  };
  std::vector<Block> blocks_;
};

/// Sinusoidal features of flow time (cos half, sin half).
std::vector<double> sinusoid(double s, std::size_t features);

}  // namespace vawm::model
