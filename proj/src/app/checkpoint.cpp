// Copyright 2026 The vawm Authors
// SPDX-License-Identifier: Apache-2.0

#include "vawm/app/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "vawm/error.hpp"

namespace vawm::app {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

const TensorRecord& Checkpoint::tensor(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return t;
  throw FormatError("checkpoint: missing tensor '" + name + "'");
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  Json manifest;
  manifest["kind"] = c.kind;
  manifest["step"] = c.step;
  manifest["rng"] = c.rng;
  manifest["config"] = c.config;
  manifest["meta"] = c.meta;
  Json list = Json::array();
  std::uint64_t offset = 0;
  for (const auto& t : c.tensors) {
    if (diffcore::shape_numel(t.shape) != t.data.size()) throw DimensionError("checkpoint: tensor " + t.name + " shape/data mismatch");
    const std::uint64_t bytes = t.data.size() * sizeof(float);
    list.push_back({{"name", t.name}, {"shape", t.shape}, {"dtype", "f32"}, {"offset", offset}, {"bytes", bytes}});
    offset += bytes;
  }
  manifest["tensors"] = list;
  const std::string m = manifest.dump();

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write checkpoint " + path.string());
  f.write(kCheckpointMagic, 4);
  const std::uint32_t version = kCheckpointVersion;
  f.write(reinterpret_cast<const char*>(&version), 4);
  const std::uint64_t len = m.size();
  f.write(reinterpret_cast<const char*>(&len), 8);
  f.write(m.data(), static_cast<std::streamsize>(m.size()));
  for (const auto& t : c.tensors) {
    f.write(reinterpret_cast<const char*>(t.data.data()), static_cast<std::streamsize>(t.data.size() * sizeof(float)));
  }
  if (!f) throw IoError("short write on checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint " + path.string());
  char magic[4];
  std::uint32_t version = 0;
  std::uint64_t len = 0;
  f.read(magic, 4);
  f.read(reinterpret_cast<char*>(&version), 4);
  f.read(reinterpret_cast<char*>(&len), 8);
  if (!f || std::memcmp(magic, kCheckpointMagic, 4) != 0) throw FormatError(path.string() + ": not a checkpoint");
  if (version != kCheckpointVersion) throw FormatError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  const auto size = std::filesystem::file_size(path);
  if (len > size - 16) throw FormatError(path.string() + ": manifest length exceeds file");
  std::string m(len, '\0');
  f.read(m.data(), static_cast<std::streamsize>(len));
  Json manifest;
  Checkpoint c;
  try {
    manifest = Json::parse(m);
    c.kind = manifest.at("kind").get<std::string>();
    c.step = manifest.at("step").get<std::uint64_t>();
    c.rng = manifest.at("rng");
    c.config = manifest.at("config");
    c.meta = manifest.at("meta");
    std::uint64_t expected = 0;
    for (const auto& t : manifest.at("tensors")) {
      TensorRecord r;
      r.name = t.at("name").get<std::string>();
      r.shape = t.at("shape").get<diffcore::Shape>();
      if (t.at("dtype").get<std::string>() != "f32") throw FormatError(path.string() + ": unsupported dtype");
      const auto offset = t.at("offset").get<std::uint64_t>();
      const auto bytes = t.at("bytes").get<std::uint64_t>();
      if (offset != expected || bytes != diffcore::shape_numel(r.shape) * sizeof(float)) {
        throw FormatError(path.string() + ": inconsistent offsets for tensor " + r.name);
      }
      expected += bytes;
      r.data.resize(bytes / sizeof(float));
      c.tensors.push_back(std::move(r));
    }
    if (16 + len + expected != size) throw FormatError(path.string() + ": payload size mismatch");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": bad manifest: " + e.what());
  }
  for (auto& t : c.tensors) f.read(reinterpret_cast<char*>(t.data.data()), static_cast<std::streamsize>(t.data.size() * sizeof(float)));
  if (!f) throw FormatError(path.string() + ": truncated payload");
  return c;
}

namespace {

TensorRecord record(const std::string& name, const diffcore::ArrayF& a) { return {name, a.shape(), a.values()}; }

TensorRecord record(const std::string& name, const std::vector<float>& v) { return {name, {v.size()}, v}; }

TensorRecord record(const std::string& name, const std::vector<double>& v) {
  return {name, {v.size()}, std::vector<float>(v.begin(), v.end())};
}

std::vector<double> to_double(const std::vector<float>& v) { return {v.begin(), v.end()}; }

void append_codec(Checkpoint& c, const codec::CodecParams& p) {
  for (const auto& w : p.weights) c.tensors.push_back(record(w.name, w.value));
  c.tensors.push_back(record("codec.latent_mean", p.latent_mean));
  c.tensors.push_back(record("codec.latent_std", p.latent_std));
  c.meta["codec_epochs"] = p.epochs;
  c.meta["codec_final_loss"] = p.final_loss;
}

codec::CodecParams read_codec(const Checkpoint& c, const codec::CodecConfig& config) {
  codec::CodecParams p = codec::init_codec(config, 0);
  for (auto& w : p.weights) {
    const auto& t = c.tensor(w.name);
    if (t.shape != w.value.shape()) throw FormatError("checkpoint: codec tensor " + w.name + " has the wrong shape");
    w.value = diffcore::ArrayF(t.shape, t.data);
  }
  p.latent_mean = c.tensor("codec.latent_mean").data;
  p.latent_std = c.tensor("codec.latent_std").data;
  p.epochs = c.meta.value("codec_epochs", std::size_t{0});
  p.final_loss = c.meta.value("codec_final_loss", 0.0);
  codec::validate_codec(p);
  return p;
}

}  // namespace

Checkpoint codec_checkpoint(const codec::CodecParams& p, const RunConfig& config) {
  Checkpoint c;
  c.kind = "codec";
  c.step = p.epochs;
  c.config = to_json(config);
  c.rng = {{"codec_seed", config.codec_train.seed}};
  c.meta = Json::object();
  append_codec(c, p);
  return c;
}

codec::CodecParams codec_from_checkpoint(const Checkpoint& c) {
  return read_codec(c, run_config_from_json(c.config).codec);
}

Checkpoint bundle_checkpoint(const Bundle& b) {
  if (!b.model) throw ContractError("bundle without a model");
  Checkpoint c;
  c.kind = "bundle";
  c.step = b.step;
  c.config = to_json(b.config);
  c.rng = {{"train_seed", b.config.train.seed}, {"sampler_seed", b.config.sampler.seed}};
  c.meta = Json::object();
  append_codec(c, b.codec);
  for (const auto& p : b.model->params()) c.tensors.push_back(record("model." + p.name, p.value));
  const auto& n = b.model->normalizer();
  c.tensors.push_back(record("norm.state_mean", n.state_mean));
  c.tensors.push_back(record("norm.state_std", n.state_std));
  c.tensors.push_back(record("norm.action_mean", n.action_mean));
  c.tensors.push_back(record("norm.action_std", n.action_std));
  return c;
}

Bundle bundle_from_checkpoint(const Checkpoint& c) {
  if (c.kind != "bundle") throw FormatError("checkpoint kind '" + c.kind + "' is not a model bundle");
  Bundle b;
  b.config = run_config_from_json(c.config);
  b.step = c.step;
  b.codec = read_codec(c, b.config.codec);
  diffcore::ParameterStore<float> params;
  const std::string prefix = "model.";
  for (const auto& t : c.tensors) {
    if (t.name.rfind(prefix, 0) == 0) params.add(t.name.substr(prefix.size()), diffcore::ArrayF(t.shape, t.data));
  }
  model::Normalizer n;
  n.state_mean = to_double(c.tensor("norm.state_mean").data);
  n.state_std = to_double(c.tensor("norm.state_std").data);
  n.action_mean = to_double(c.tensor("norm.action_mean").data);
  n.action_std = to_double(c.tensor("norm.action_std").data);
  b.model = std::make_unique<model::VaModel<float>>(b.config.model, std::move(params), std::move(n));
  return b;
}

Bundle load_bundle(const std::filesystem::path& path) { return bundle_from_checkpoint(load_checkpoint(path)); }

namespace {

std::uint64_t hash_store(const diffcore::ParameterStore<float>& s, std::uint64_t h) {
  for (const auto& p : s) {
    h = fnv1a(p.name.data(), p.name.size(), h);
    h = fnv1a(p.value.ptr(), p.value.size() * sizeof(float), h);
  }
  return h;
}

std::uint64_t hash_model(const model::VaModel<float>& m, std::uint64_t h) {
  h = hash_store(m.params(), h);
  const auto& n = m.normalizer();
  for (const auto* v : {&n.state_mean, &n.state_std, &n.action_mean, &n.action_std}) {
    const std::vector<float> f(v->begin(), v->end());
    h = fnv1a(f.data(), f.size() * sizeof(float), h);
  }
  return h;
}

}  // namespace

std::string parameter_hash(const model::VaModel<float>& m) { return hex64(hash_model(m, 0xcbf29ce484222325ULL)); }

std::string parameter_hash(const Bundle& b) {
  std::uint64_t h = hash_store(b.codec.weights, 0xcbf29ce484222325ULL);
  h = fnv1a(b.codec.latent_mean.data(), b.codec.latent_mean.size() * sizeof(float), h);
  h = fnv1a(b.codec.latent_std.data(), b.codec.latent_std.size() * sizeof(float), h);
  if (b.model) h = hash_model(*b.model, h);
  return hex64(h);
}

}  // namespace vawm::app
