// Copyright 2026 The vawm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "vawm/app/config.hpp"

namespace vawm::app {

inline constexpr char kCheckpointMagic[4] = {'D', 'V', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct TensorRecord {
  std::string name;
  diffcore::Shape shape;
  std::vector<float> data;
};

/// Container: magic, u32 version, u64 manifest length, JSON manifest,
/// little-endian f32 payload in manifest order.
struct Checkpoint {
  std::string kind;  // "codec" or "bundle"
  std::uint64_t step = 0;
  Json config;
  Json rng;
  Json meta;
  std::vector<TensorRecord> tensors;

  const TensorRecord& tensor(const std::string& name) const;  // throws FormatError
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::filesystem::path& path);

Checkpoint codec_checkpoint(const codec::CodecParams& p, const RunConfig& config);
codec::CodecParams codec_from_checkpoint(const Checkpoint& c);

/// Codec, model and normaliser trained together.
struct Bundle {
  RunConfig config;
  codec::CodecParams codec;
  std::unique_ptr<model::VaModel<float>> model;
  std::uint64_t step = 0;
};

Checkpoint bundle_checkpoint(const Bundle& b);
Bundle bundle_from_checkpoint(const Checkpoint& c);
Bundle load_bundle(const std::filesystem::path& path);

/// FNV-1a over parameter names and f32 bytes (model, normaliser and codec).
std::string parameter_hash(const Bundle& b);
std::string parameter_hash(const model::VaModel<float>& m);

}  // namespace vawm::app
