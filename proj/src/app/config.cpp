// Copyright 2026 The vawm Authors
// SPDX-License-Identifier: Apache-2.0

#include "vawm/app/config.hpp"

#include <cstdio>
#include <fstream>

#include "vawm/error.hpp"

namespace vawm::app {

void RunConfig::sync_continuation() {
  rollout.continuation = model.m == 1 ? rollout::ContinuationMode::single_frame : rollout::ContinuationMode::buffer;
}

void RunConfig::validate() const {
  model.validate();
  if (model.m != rollout.history()) throw ParameterError("config: model.m does not match the continuation mode");
  if (model.latent_h != codec.latent_h || model.latent_w != codec.latent_w || model.latent_c != codec.latent_c) {
    throw ParameterError("config: model latent shape differs from the codec");
  }
  if (model.k_actions != sim::kStoredActionHorizon) throw ParameterError("config: k_actions must be 8");
  if (train.batch == 0) throw ParameterError("config: batch must be positive");
  if (train.micro_batch > train.batch) throw ParameterError("config: micro_batch exceeds batch");
  if (train.micro_batch > 0 && train.batch % train.micro_batch != 0) {
    throw ParameterError("config: batch must be a multiple of micro_batch");
  }
  if (!(train.lr > 0)) throw ParameterError("config: lr must be positive");
  if (sampler.steps == 0) throw ParameterError("config: sampler steps must be >= 1");
  if (rollout.execute_k == 0 || rollout.execute_k > model.k_actions) throw ParameterError("config: execute_k out of range");
  if (data.train_domain != "A" && data.train_domain != "B") throw ParameterError("config: unknown train domain");
  if (data.eval_domain != "A" && data.eval_domain != "B") throw ParameterError("config: unknown eval domain");
}

RunConfig default_run_config() {
  RunConfig c;
  c.model.layers = 2;
  c.sync_continuation();
  return c;
}

Json to_json(const model::ModelConfig& c) {
  return Json{{"d", c.d},
              {"layers", c.layers},
              {"heads", c.heads},
              {"m", c.m},
              {"n_pred", c.n_pred},
              {"k_actions", c.k_actions},
              {"l_state", c.l_state},
              {"latent_h", c.latent_h},
              {"latent_w", c.latent_w},
              {"latent_c", c.latent_c},
              {"ff_mult", c.ff_mult},
              {"time_features", c.time_features},
              {"mask_mode", model::mask_mode_name(c.mask_mode)},
              {"action_only", c.action_only}};
}

model::ModelConfig model_config_from_json(const Json& j, model::ModelConfig c) {
  auto get = [&](const char* k, auto& v) {
    if (j.contains(k)) v = j.at(k).get<std::decay_t<decltype(v)>>();
  };
  get("d", c.d);
  get("layers", c.layers);
  get("heads", c.heads);
  get("m", c.m);
  get("n_pred", c.n_pred);
  get("k_actions", c.k_actions);
  get("l_state", c.l_state);
  get("latent_h", c.latent_h);
  get("latent_w", c.latent_w);
  get("latent_c", c.latent_c);
  get("ff_mult", c.ff_mult);
  get("time_features", c.time_features);
  if (j.contains("mask_mode")) c.mask_mode = model::mask_mode_from_name(j.at("mask_mode").get<std::string>());
  get("action_only", c.action_only);
  return c;
}

Json to_json(const metrics::MetricConstants& k) {
  return Json{{"ttc_horizon", k.ttc_horizon},
              {"ttc_substep", k.ttc_substep},
              {"max_accel", k.max_accel},
              {"max_jerk", k.max_jerk},
              {"min_expert_progress", k.min_expert_progress}};
}

Json to_json(const RunConfig& c) {
  Json j;
  j["data"] = {{"train_domain", c.data.train_domain}, {"eval_domain", c.data.eval_domain},
               {"train_episodes", c.data.train_episodes}, {"val_episodes", c.data.val_episodes},
               {"eval_scenarios", c.data.eval_scenarios}, {"duration", c.data.duration},
               {"domain_mix", c.data.domain_mix}, {"seed", c.data.seed}};
  j["codec"] = {{"frame_h", c.codec.frame_h}, {"frame_w", c.codec.frame_w}, {"hidden", c.codec.hidden},
                {"latent_h", c.codec.latent_h}, {"latent_w", c.codec.latent_w}, {"latent_c", c.codec.latent_c},
                {"epochs", c.codec_train.epochs}, {"batch", c.codec_train.batch}, {"lr", c.codec_train.lr},
                {"weight_decay", c.codec_train.weight_decay}, {"seed", c.codec_train.seed}};
  j["model"] = to_json(c.model);
  j["train"] = {{"steps", c.train.steps}, {"batch", c.train.batch}, {"micro_batch", c.train.micro_batch},
                {"lr", c.train.lr}, {"warmup_steps", c.train.warmup_steps},
                {"weight_decay", c.train.weight_decay}, {"seed", c.train.seed},
                {"lambda_act", c.train.loss.lambda_act}, {"aux_regression", c.train.loss.aux_regression},
                {"aux_weight", c.train.loss.aux_weight}, {"action_ae_weight", c.train.loss.action_ae_weight},
                {"checkpoint_every", c.train.checkpoint_every}};
  j["sampler"] = {{"steps", c.sampler.steps}, {"seed", c.sampler.seed}};
  j["rollout"] = {{"execute_k", c.rollout.execute_k}, {"max_cycles", c.rollout.max_cycles},
                  {"continuation", rollout::continuation_name(c.rollout.continuation)}};
  j["metrics"] = to_json(c.metrics);
  return j;
}

RunConfig run_config_from_json(const Json& j) {
  RunConfig c = default_run_config();
  auto get = [](const Json& o, const char* k, auto& v) {
    if (o.contains(k)) v = o.at(k).get<std::decay_t<decltype(v)>>();
  };
  try {
    if (j.contains("data")) {
      const auto& d = j["data"];
      get(d, "train_domain", c.data.train_domain);
      get(d, "eval_domain", c.data.eval_domain);
      get(d, "train_episodes", c.data.train_episodes);
      get(d, "val_episodes", c.data.val_episodes);
      get(d, "eval_scenarios", c.data.eval_scenarios);
      get(d, "duration", c.data.duration);
      get(d, "domain_mix", c.data.domain_mix);
      get(d, "seed", c.data.seed);
    }
    if (j.contains("codec")) {
      const auto& d = j["codec"];
      get(d, "frame_h", c.codec.frame_h);
      get(d, "frame_w", c.codec.frame_w);
      get(d, "hidden", c.codec.hidden);
      get(d, "latent_h", c.codec.latent_h);
      get(d, "latent_w", c.codec.latent_w);
      get(d, "latent_c", c.codec.latent_c);
      get(d, "epochs", c.codec_train.epochs);
      get(d, "batch", c.codec_train.batch);
      get(d, "lr", c.codec_train.lr);
      get(d, "weight_decay", c.codec_train.weight_decay);
      get(d, "seed", c.codec_train.seed);
    }
    if (j.contains("model")) c.model = model_config_from_json(j["model"], c.model);
    if (j.contains("train")) {
      const auto& d = j["train"];
      get(d, "steps", c.train.steps);
      get(d, "batch", c.train.batch);
      get(d, "micro_batch", c.train.micro_batch);
      get(d, "lr", c.train.lr);
      get(d, "warmup_steps", c.train.warmup_steps);
      get(d, "weight_decay", c.train.weight_decay);
      get(d, "seed", c.train.seed);
      get(d, "lambda_act", c.train.loss.lambda_act);
      get(d, "aux_regression", c.train.loss.aux_regression);
      get(d, "aux_weight", c.train.loss.aux_weight);
      get(d, "action_ae_weight", c.train.loss.action_ae_weight);
      get(d, "checkpoint_every", c.train.checkpoint_every);
    }
    if (j.contains("sampler")) {
      get(j["sampler"], "steps", c.sampler.steps);
      get(j["sampler"], "seed", c.sampler.seed);
    }
    c.sync_continuation();
    if (j.contains("rollout")) {
      const auto& d = j["rollout"];
      get(d, "execute_k", c.rollout.execute_k);
      get(d, "max_cycles", c.rollout.max_cycles);
      if (d.contains("continuation")) c.rollout.continuation = rollout::continuation_from_name(d["continuation"].get<std::string>());
    }
    if (j.contains("metrics")) {
      const auto& d = j["metrics"];
      get(d, "ttc_horizon", c.metrics.ttc_horizon);
      get(d, "ttc_substep", c.metrics.ttc_substep);
      get(d, "max_accel", c.metrics.max_accel);
      get(d, "max_jerk", c.metrics.max_jerk);
      get(d, "min_expert_progress", c.metrics.min_expert_progress);
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("run config: ") + e.what());
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config " + path.string());
  Json j;
  try {
    j = Json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("config " + path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string config_hash(const RunConfig& c) {
  const std::string s = to_json(c).dump();
  return hex64(fnv1a(s.data(), s.size()));
}

}  // namespace vawm::app
