// Copyright 2026 The vawm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "vawm/codec/codec.hpp"
#include "vawm/flow/flow.hpp"
#include "vawm/metrics/closed_loop.hpp"
#include "vawm/model/vamodel.hpp"
#include "vawm/rollout/rollout.hpp"

namespace vawm::app {

using Json = nlohmann::ordered_json;

struct DataConfig {
  std::string train_domain = "A";
  std::string eval_domain = "A";
  std::size_t train_episodes = 240;
  std::size_t val_episodes = 40;
  std::size_t eval_scenarios = 50;
  double duration = 12.0;
  bool domain_mix = false;  // add domain-B episodes to training
  std::uint64_t seed = 0;
};

struct TrainConfig {
  std::size_t steps = 2000;
  std::size_t batch = 16;
  std::size_t micro_batch = 0;  // 0: whole batch in one pass
  double lr = 1e-3;
  std::size_t warmup_steps = 100;
  double weight_decay = 0.01;
  std::uint64_t seed = 0;
  flow::LossConfig loss;
  std::size_t checkpoint_every = 0;
};

struct RunConfig {
  DataConfig data;
  codec::CodecConfig codec;
  codec::CodecTrainConfig codec_train;
  model::ModelConfig model;
  TrainConfig train;
  flow::SamplerConfig sampler;
  rollout::RolloutConfig rollout;
  metrics::MetricConstants metrics;

  /// Rollout continuation consistent with the model's history length.
  void sync_continuation();
  void validate() const;  // throws ParameterError
};

/// Default desk-scale configuration.
RunConfig default_run_config();

Json to_json(const RunConfig& c);
RunConfig run_config_from_json(const Json& j);  // missing keys keep their defaults
RunConfig load_run_config(const std::filesystem::path& path);

Json to_json(const model::ModelConfig& c);
model::ModelConfig model_config_from_json(const Json& j, model::ModelConfig base = {});
Json to_json(const metrics::MetricConstants& k);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);
/// Hash of the canonical JSON dump.
std::string config_hash(const RunConfig& c);

}  // namespace vawm::app
