// Copyright 2026 The vawm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vawm/sim/expert.hpp"
#include "vawm/sim/render.hpp"

namespace vawm::sim {

inline constexpr std::uint32_t kDatasetFormatVersion = 1;
inline constexpr std::size_t kStoredActionHorizon = 8;

/// Frames at 2 FPS with the ego state, expert chunk and command per frame.
struct Episode {
  std::string domain;
  std::uint64_t scenario_seed = 0;
  std::vector<Frame> frames;
  std::vector<EgoState> states;
  std::vector<std::vector<Pose2>> expert_actions;
  std::vector<Command> commands;

  std::size_t length() const { return frames.size(); }
  double timestamp(std::size_t i) const { return static_cast<double>(i) * kFrameDt; }
};

struct ExpertRunStats {
  std::size_t collision_steps = 0;
  std::size_t off_corridor_steps = 0;
};

/// Drive the scenario with the expert, re-planning every frame and
/// executing the first waypoint. Covers scenario.frame_count() frames.
Episode simulate_expert_episode(const Scenario& s, const FrameSpec& frame = {}, ExpertRunStats* stats = nullptr,
                                std::vector<WorldState>* worlds = nullptr);

struct DatasetOptions {
  ScenarioOptions scenario;
  FrameSpec frame;
  std::string split = "train";
};

struct DatasetManifest {
  std::uint32_t format_version = kDatasetFormatVersion;
  std::string domain;
  std::string split;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> episode_seeds;
  std::vector<std::string> files;
  std::size_t expert_collision_episodes = 0;
  std::size_t expert_off_corridor_episodes = 0;
  std::size_t aborted_episodes = 0;
  double duration = 0.0;
  std::size_t frame_height = 0;
  std::size_t frame_width = 0;
};

/// Simulate `n_episodes` expert episodes and persist them under `out`
/// (manifest.json plus one binary file per episode).
DatasetManifest generate_dataset(const DomainSpec& domain, std::size_t n_episodes, std::uint64_t seed,
                                 const std::filesystem::path& out, const DatasetOptions& options = {});

/// Per-episode seed used by generate_dataset for slot `index`.
std::uint64_t episode_seed(std::uint64_t dataset_seed, std::size_t index, std::size_t retry = 0);

void write_episode(const std::filesystem::path& path, const Episode& e);
Episode read_episode(const std::filesystem::path& path);

void write_manifest(const std::filesystem::path& dir, const DatasetManifest& m);
DatasetManifest read_manifest(const std::filesystem::path& dir);

struct Dataset {
  DatasetManifest manifest;
  std::vector<Episode> episodes;
};

Dataset load_dataset(const std::filesystem::path& dir);

/// One training window. Frame indices refer to the source episode.
struct WindowSample {
  std::size_t last = 0;               // newest history frame
  std::vector<std::size_t> history;   // m indices, oldest first
  std::vector<std::size_t> future;    // N indices
  EgoState state;                     // at `last`
  Command command = Command::follow;
  std::vector<Pose2> actions;         // K realised future poses in the ego frame at `last`
};

/// Stride-1 sliding windows; empty when the episode is shorter than
/// m + max(N, K).
std::vector<WindowSample> slice_windows(const Episode& e, std::size_t m = 4, std::size_t n_future = 8,
                                        std::size_t k_actions = 8);

}  // namespace vawm::sim
