// Copyright 2026 The vawm Authors
// SPDX-License-Identifier: Apache-2.0

#include <random>

#include <doctest.h>

#include "vawm/diffcore/gradcheck.hpp"
#include "vawm/error.hpp"
#include "vawm/flow/flow.hpp"
#include "vawm/model/vamodel.hpp"

using namespace vawm;
using namespace vawm::model;
using diffcore::NdArray;
using diffcore::Tape;

namespace {

template <typename T>
NdArray<T> randn(diffcore::Shape shape, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  NdArray<T> a(shape);
  for (auto& v : a.values()) v = static_cast<T>(n(rng));
  return a;
}

template <typename T>
ModelInput<T> random_input(const ModelConfig& c, std::size_t B, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ModelInput<T> in;
  in.batch = B;
  in.hist_latents = randn<T>({B * c.m * c.l_v(), c.latent_c}, rng);
  in.state = randn<T>({B, 2}, rng);
  for (std::size_t b = 0; b < B; ++b) in.commands.push_back(static_cast<std::uint8_t>(rng() % kCommandVocab));
  if (!c.action_only) in.noisy_latents = randn<T>({B * c.fut_tokens(), c.latent_c}, rng);
  in.noisy_actions = randn<T>({B * c.k_actions, 3}, rng);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t b = 0; b < B; ++b) in.s.push_back(u(rng));
  return in;
}

ModelConfig small_config() {
  ModelConfig c;
  c.d = 16;
  c.layers = 2;
  c.heads = 2;
  c.n_pred = 2;
  c.m = 2;
  c.k_actions = 3;
  c.time_features = 8;
  c.ff_mult = 2;
  return c;
}

template <typename T>
bool rows_equal(const NdArray<T>& a, std::size_t ra, const NdArray<T>& b, std::size_t rb) {
  for (std::size_t j = 0; j < a.cols(); ++j)
    if (a.at(ra, j) != b.at(rb, j)) return false;
  return true;
}

}  // namespace

TEST_CASE("model config arithmetic and validation") {
  ModelConfig c;
  CHECK(c.l_v() == 16);
  CHECK(c.l_cond() == 65);
  CHECK(c.l_tgt() == 136);
  CHECK(c.length() == 201);
  c.action_only = true;
  CHECK(c.l_tgt() == 8);
  CHECK(c.target_latent_elems() == 0);
  c.heads = 5;
  CHECK_THROWS_AS(c.validate(), ParameterError);
  CHECK(mask_mode_from_name(mask_mode_name(MaskMode::causal)) == MaskMode::causal);
}

TEST_CASE("attention masks") {
  ModelConfig c;
  CHECK(build_mask(MaskMode::bidirectional, segment_tags(c)).blocked_count() == 0);
  const auto tags = segment_tags(c);
  const auto m = build_mask(MaskMode::causal, tags);
  CHECK(m.blocked_count() == 1024);
  for (std::size_t q = 0; q < tags.size(); ++q)
    for (std::size_t k = 0; k < tags.size(); ++k) {
      const bool blocked = tags[q] == Segment::fut_vid && tags[k] == Segment::act;
      CHECK(static_cast<bool>(m.allowed[q * tags.size() + k]) == !blocked);
    }
  c.action_only = true;
  CHECK(build_mask(MaskMode::causal, segment_tags(c)).blocked_count() == 0);
}

TEST_CASE("tokenizers: counts, raster locality and bias rows") {
  const ModelConfig c;
  VaModel<double> m(c, 3, false);
  std::mt19937_64 rng(1);
  Tape<double> t;
  const auto lat = randn<double>({4 * 16, 4}, rng);
  const auto tok = m.tokenize_latents(t, t.constant(lat)).value();
  CHECK(tok.rows() == 64);
  CHECK(tok.cols() == 64);
  auto swapped = lat;
  for (std::size_t j = 0; j < 4; ++j) std::swap(swapped.at(3, j), swapped.at(9, j));
  const auto tok2 = m.tokenize_latents(t, t.constant(swapped)).value();
  for (std::size_t r = 0; r < 64; ++r) {
    if (r == 3 || r == 9) {
      CHECK_FALSE(rows_equal(tok, r, tok2, r));
    } else {
      CHECK(rows_equal(tok, r, tok2, r));
    }
  }
  CHECK(rows_equal(tok, 3, tok2, 9));
  const auto zero_tok = m.tokenize_latents(t, t.constant(NdArray<double>({16, 4}))).value();
  const auto& bias = m.params()[m.params().find("lat.proj.b")].value;
  for (std::size_t r = 0; r < 16; ++r)
    for (std::size_t j = 0; j < 64; ++j) CHECK(zero_tok.at(r, j) == bias[j]);
  CHECK_THROWS_AS(m.tokenize_latents(t, t.constant(NdArray<double>({16, 3}))), DimensionError);

  const auto s0 = m.embed_state(t, t.constant(NdArray<double>({1, 2}))).value();
  CHECK(s0 == m.embed_state(t, t.constant(NdArray<double>({1, 2}))).value());
  CHECK(s0.rows() == 1);
  const auto a0 = m.embed_actions(t, t.constant(NdArray<double>({8, 3}))).value();
  CHECK(a0.rows() == 8);
  for (std::size_t r = 1; r < 8; ++r) CHECK(rows_equal(a0, 0, a0, r));
}

TEST_CASE("assembled condition rows copy the standalone embeddings") {
  const ModelConfig c;
  VaModel<double> m(c, 4, false);
  const auto in = random_input<double>(c, 2, 9);
  Tape<double> t;
  const auto blocks = m.assemble_blocks(t, in);
  CHECK(blocks.cond.rows() == 2 * 65);
  CHECK(blocks.target.rows() == 2 * 136);
  const auto S = m.embed_state(t, t.constant(in.state)).value();
  const auto H = m.tokenize_latents(t, t.constant(in.hist_latents)).value();
  const auto F = m.tokenize_latents(t, t.constant(in.noisy_latents)).value();
  const auto A = m.embed_actions(t, t.constant(in.noisy_actions)).value();
  const auto& cond = blocks.cond.value();
  const auto& tgt = blocks.target.value();
  for (std::size_t b = 0; b < 2; ++b) {
    CHECK(rows_equal(cond, b * 65, S, b));
    for (std::size_t j = 0; j < 64; ++j) CHECK(rows_equal(cond, b * 65 + 1 + j, H, b * 64 + j));
    for (std::size_t j = 0; j < 128; ++j) CHECK(rows_equal(tgt, b * 136 + j, F, b * 128 + j));
    for (std::size_t k = 0; k < 8; ++k) CHECK(rows_equal(tgt, b * 136 + 128 + k, A, b * 8 + k));
  }
  auto bad = in;
  bad.commands.pop_back();
  CHECK_THROWS(m.assemble_blocks(t, bad));
}

TEST_CASE("forward: head contract, determinism, immutability and live condition") {
  const ModelConfig c = small_config();
  VaModel<double> m(c, 5, false);
  auto in = random_input<double>(c, 2, 10);
  const auto before = in;
  Tape<double> t;
  ForwardTrace<double> trace;
  const auto out = m.forward(t, in, &trace);
  CHECK(out.latent_velocity.rows() == 2 * c.fut_tokens());
  CHECK(out.latent_velocity.cols() == c.latent_c);
  CHECK(out.action_velocity.rows() == 2 * c.k_actions);
  CHECK(out.action_velocity.cols() == 3);
  CHECK(trace.self_attention.size() == c.layers);
  CHECK(in.hist_latents == before.hist_latents);
  CHECK(in.state == before.state);
  CHECK(in.noisy_latents == before.noisy_latents);
  CHECK(in.noisy_actions == before.noisy_actions);

  Tape<double> t2;
  ForwardTrace<double> trace2;
  const auto out2 = m.forward(t2, in, &trace2);
  CHECK(out.latent_velocity.value() == out2.latent_velocity.value());
  CHECK(out.action_velocity.value() == out2.action_velocity.value());
  CHECK(trace.cond_input == trace2.cond_input);

  in.hist_latents[0] += 1.0;
  Tape<double> t3;
  CHECK_FALSE(m.forward(t3, in, nullptr).action_velocity.value() == out.action_velocity.value());

  in = before;
  in.s[0] = 1.5;
  Tape<double> t4;
  CHECK_THROWS_AS(m.forward(t4, in, nullptr), ParameterError);
}

TEST_CASE("forward is not permutation invariant over future tokens") {
  const ModelConfig c = small_config();
  VaModel<double> m(c, 6, false);
  auto in = random_input<double>(c, 1, 11);
  Tape<double> t;
  const auto out = m.forward(t, in).latent_velocity.value();
  for (std::size_t j = 0; j < c.latent_c; ++j) std::swap(in.noisy_latents.at(0, j), in.noisy_latents.at(5, j));
  Tape<double> t2;
  const auto out2 = m.forward(t2, in).latent_velocity.value();
  CHECK_FALSE((rows_equal(out, 0, out2, 5) && rows_equal(out, 5, out2, 0)));
}

TEST_CASE("causal mask: action inputs never reach future-video rows in layer 1") {
  ModelConfig c = small_config();
  c.mask_mode = MaskMode::causal;
  VaModel<double> m(c, 7, false);
  for (std::uint64_t trial = 0; trial < 10; ++trial) {
    auto in = random_input<double>(c, 2, 100 + trial);
    Tape<double> t;
    ForwardTrace<double> a;
    m.forward(t, in, &a);
    in.noisy_actions.fill(0.0);
    Tape<double> t2;
    ForwardTrace<double> b;
    m.forward(t2, in, &b);
    const std::size_t L = c.length();
    for (std::size_t s = 0; s < 2; ++s) {
      for (std::size_t i = c.l_cond(); i < c.l_cond() + c.fut_tokens(); ++i) CHECK(rows_equal(a.self_attention[0], s * L + i, b.self_attention[0], s * L + i));
      bool act_changed = false;
      for (std::size_t i = c.l_cond() + c.fut_tokens(); i < L; ++i)
        act_changed = act_changed || !rows_equal(a.self_attention[0], s * L + i, b.self_attention[0], s * L + i);
      CHECK(act_changed);
    }
  }
}

TEST_CASE("zero-initialised modulation gates every block") {
  const ModelConfig c = small_config();
  VaModel<double> m(c, 8, true);
  const auto in = random_input<double>(c, 1, 12);
  Tape<double> t;
  const auto out = m.forward(t, in);
  // With adaLN-zero and a zero latent head, the latent velocity is the head bias.
  const auto& bias = m.params()[m.params().find("lat.head.b")].value;
  for (std::size_t r = 0; r < out.latent_velocity.rows(); ++r)
    for (std::size_t j = 0; j < c.latent_c; ++j) CHECK(out.latent_velocity.value().at(r, j) == bias[j]);
}

TEST_CASE("full one-block model loss passes the gradient check") {
  ModelConfig c = small_config();
  c.layers = 1;
  c.d = 8;
  c.k_actions = 2;
  c.n_pred = 1;
  c.m = 1;
  c.latent_h = 2;
  c.latent_w = 2;
  c.latent_c = 2;
  c.mask_mode = MaskMode::causal;
  VaModel<double> m(c, 9, false);
  std::mt19937_64 rng(13);
  flow::FlowBatch<double> batch;
  const auto in = random_input<double>(c, 2, 14);
  batch.cond = {2, in.hist_latents, in.state, in.commands};
  batch.y0_latents = randn<double>({2 * c.fut_tokens(), c.latent_c}, rng);
  batch.y0_actions = randn<double>({2 * c.k_actions, 3}, rng);
  flow::draw_noise(batch, c, 15);
  flow::LossConfig lc;
  lc.aux_regression = true;
  const auto r = diffcore::grad_check_params(
      [&](Tape<double>& t) { return flow::training_loss(t, m, batch, lc); }, m.params(), 1e-5, 1e-5);
  MESSAGE("max relative error " << r.max_rel_error << " over " << r.coordinates << " coordinates");
  CHECK(r.max_rel_error < 1e-4);
}
