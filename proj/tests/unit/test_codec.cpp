// Copyright 2026 The vawm Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include <doctest.h>

#include "vawm/codec/codec.hpp"
#include "vawm/error.hpp"
#include "vawm/sim/dataset.hpp"

using namespace vawm;
using namespace vawm::codec;
using namespace vawm::sim;

namespace {

std::vector<Frame> episode_frames(std::uint64_t first_seed, std::size_t episodes) {
  std::vector<Frame> out;
  for (std::size_t i = 0; i < episodes; ++i) {
    const Episode e = simulate_expert_episode(sample_scenario(domain_a(), first_seed + i));
    out.insert(out.end(), e.frames.begin(), e.frames.end());
  }
  return out;
}

std::vector<const Frame*> pointers(const std::vector<Frame>& f) {
  std::vector<const Frame*> p;
  for (const auto& x : f) p.push_back(&x);
  return p;
}

float silu(float x) { return x / (1.0f + std::exp(-x)); }

}  // namespace

TEST_CASE("codec encode is deterministic, per-frame and affine at zero") {
  const CodecParams p = init_codec({}, 3);
  const auto frames = episode_frames(10, 1);
  const LatentFrame a = encode_frame(frames[0], p);
  CHECK(a == encode_frame(frames[0], p));
  CHECK(a.values.size() == 64);

  // Batch encoding: mutating the second frame leaves the first latent alone.
  std::vector<Frame> pair{frames[0], frames[1]};
  const ArrayF z1 = encode_batch(frames_to_array(pointers(pair), p.config), p);
  for (auto& v : pair[1].cells) v = 1.0f - v;
  const ArrayF z2 = encode_batch(frames_to_array(pointers(pair), p.config), p);
  for (std::size_t j = 0; j < 64; ++j) CHECK(z1.at(0, j) == z2.at(0, j));
  bool changed = false;
  for (std::size_t j = 0; j < 64; ++j) changed = changed || z1.at(1, j) != z2.at(1, j);
  CHECK(changed);

  // Zero frame: the bias path tanh(b2 + W2 silu(b1)).
  Frame zero = frames[0];
  std::fill(zero.cells.begin(), zero.cells.end(), 0.0f);
  CodecParams q = init_codec({}, 4);
  for (auto& v : q.weights[1].value.values()) v = 0.05f;  // enc.b1
  for (auto& v : q.weights[3].value.values()) v = -0.02f; // enc.b2
  const LatentFrame lz = encode_frame(zero, q);
  CHECK(lz == encode_frame(zero, q));
  const auto& w2 = q.weights[2].value;
  for (std::size_t j = 0; j < 64; ++j) {
    float acc = -0.02f;
    for (std::size_t h = 0; h < q.config.hidden; ++h) acc += silu(0.05f) * w2.at(h, j);
    CHECK(lz.values[j] == doctest::Approx(std::tanh(acc)).epsilon(1e-5));
  }

  Frame small = frames[0];
  small.height = 16;
  small.cells.resize(16 * 32);
  CHECK_THROWS_AS(encode_frame(small, p), DimensionError);
}

TEST_CASE("codec decode clips and is deterministic") {
  CodecParams p = init_codec({}, 5);
  LatentFrame l;
  l.values.assign(64, 0.3f);
  const Frame f = decode_frame(l, p);
  CHECK(f.height == 32);
  CHECK(f == decode_frame(l, p));
  for (float v : f.cells) CHECK((v >= 0.0f && v <= 1.0f));
  for (auto& v : p.weights[7].value.values()) v = 5.0f;  // dec.b2 pushes every pre-activation above 1
  const ArrayF raw = decode_batch_raw(ArrayF({1, 64}, std::vector<float>(64, 0.0f)), p);
  for (float v : raw.values()) REQUIRE(v > 1.0f);
  for (float v : decode_frame(LatentFrame{4, 4, 4, 0, std::vector<float>(64, 0.0f)}, p).cells) CHECK(v == 1.0f);
  LatentFrame bad;
  bad.values.assign(48, 0.0f);
  bad.c = 3;
  CHECK_THROWS_AS(decode_frame(bad, p), DimensionError);
}

TEST_CASE("codec training: loss decreases, determinism, degenerate data") {
  const auto train = episode_frames(100, 16);
  const auto held = episode_frames(900, 3);
  CodecTrainConfig cfg;
  cfg.seed = 1;
  cfg.epochs = 0;
  const auto r0 = train_codec(pointers(train), cfg);
  cfg.epochs = 1;
  const auto r1 = train_codec(pointers(train), cfg);
  CHECK(reconstruction_mse(pointers(train), r1.params) < reconstruction_mse(pointers(train), r0.params));
  const auto r1b = train_codec(pointers(train), cfg);
  for (std::size_t i = 0; i < r1.params.weights.size(); ++i) CHECK(r1.params.weights[i].value == r1b.params.weights[i].value);
  CHECK(r1.params.latent_mean == r1b.params.latent_mean);

  cfg.epochs = 20;
  const auto r = train_codec(pointers(train), cfg);
  for (std::size_t e = 1; e < r.epoch_loss.size(); ++e) CHECK(r.epoch_loss[e] <= r.epoch_loss[e - 1] * 1.05);
  const double mse = reconstruction_mse(pointers(held), r.params);
  MESSAGE("held-out reconstruction MSE " << mse);
  CHECK(mse < 0.01);

  std::vector<Frame> same(64, train[5]);
  cfg.epochs = 150;
  const auto rs = train_codec(pointers(same), cfg);
  CHECK(rs.epoch_loss.back() < 1e-4);

  CHECK_THROWS_AS(train_codec({}, cfg), ContractError);
}
