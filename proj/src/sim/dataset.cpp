// Copyright 2026 The vawm Authors
// SPDX-License-Identifier: Apache-2.0

#include "vawm/sim/dataset.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <json.hpp>

#include "vawm/error.hpp"
#include "vawm/rng.hpp"

namespace vawm::sim {

static_assert(std::endian::native == std::endian::little, "dataset files are little-endian");

namespace fs = std::filesystem;
using json = nlohmann::json;

Episode simulate_expert_episode(const Scenario& s, const FrameSpec& frame, ExpertRunStats* stats,
                                std::vector<WorldState>* worlds) {
  Episode e;
  e.domain = s.domain;
  e.scenario_seed = s.seed;
  const std::size_t T = s.frame_count();
  WorldState w = initial_world(s);
  EgoState ego = s.ego_start;
  ExpertRunStats local;
  for (std::size_t t = 0; t < T; ++t) {
    if (w.collision) ++local.collision_steps;
    if (w.off_corridor) ++local.off_corridor_steps;
    if (worlds) worlds->push_back(w);
    e.frames.push_back(render_frame(s, w, ego.pose(), frame));
    e.states.push_back(ego);
    e.commands.push_back(s.command);
    e.expert_actions.push_back(expert_policy(s, w, ego, kStoredActionHorizon));
    if (t + 1 == T) break;
    const Pose2 next = compose(ego.pose(), e.expert_actions.back().front());
    const WorldState nw = step_world(s, w, next);
    ego = state_from_poses(ego.pose(), next);
    w = nw;
  }
  if (stats) *stats = local;
  return e;
}

std::uint64_t episode_seed(std::uint64_t dataset_seed, std::size_t index, std::size_t retry) {
  return derive_seed(dataset_seed, retry == 0 ? "episode" : "episode-retry", index * 16 + retry);
}

namespace {

template <typename V>
void put(std::ofstream& f, V v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(V));
}

template <typename V>
V get(std::ifstream& f) {
  V v{};
  f.read(reinterpret_cast<char*>(&v), sizeof(V));
  if (!f) throw FormatError("episode file truncated");
  return v;
}

json style_json(const RenderStyle& s) {
  return json{{"id", s.id},
              {"off_road", s.off_road},
              {"drivable", s.drivable},
              {"marking", s.marking},
              {"obstacle", s.obstacle},
              {"agent", s.agent},
              {"footprint", s.footprint == Footprint::disc ? "disc" : "square"},
              {"dash_length", s.dash_length},
              {"dash_gap", s.dash_gap}};
}

json domain_json(const DomainSpec& d) {
  return json{{"name", d.name},
              {"half_width", {d.half_width.lo, d.half_width.hi}},
              {"obstacle_density", d.obstacle_density},
              {"agent_speed", {d.agent_speed.lo, d.agent_speed.hi}},
              {"curvature", {d.curvature.lo, d.curvature.hi}},
              {"ego_speed", {d.ego_speed.lo, d.ego_speed.hi}},
              {"style", style_json(d.style)},
              {"rng_label", d.rng_label}};
}

}  // namespace

void write_episode(const fs::path& path, const Episode& e) {
  const std::size_t T = e.length();
  if (e.states.size() != T || e.expert_actions.size() != T || e.commands.size() != T) {
    throw ContractError("write_episode: frames, states, actions and commands differ in length");
  }
  const std::size_t H = T ? e.frames[0].height : 0, W = T ? e.frames[0].width : 0;
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f.write("DVAE", 4);
  put<std::uint32_t>(f, kDatasetFormatVersion);
  put<std::uint32_t>(f, static_cast<std::uint32_t>(T));
  put<std::uint32_t>(f, static_cast<std::uint32_t>(H));
  put<std::uint32_t>(f, static_cast<std::uint32_t>(W));
  for (const auto& fr : e.frames) {
    if (fr.height != H || fr.width != W) throw ContractError("write_episode: frame size changes within episode");
    f.write(reinterpret_cast<const char*>(fr.cells.data()), static_cast<std::streamsize>(fr.cells.size() * 4));
  }
  for (const auto& s : e.states) {
    for (double v : {s.x, s.y, s.yaw, s.vx, s.vy}) put<float>(f, static_cast<float>(v));
  }
  for (const auto& chunk : e.expert_actions) {
    if (chunk.size() != kStoredActionHorizon) throw ContractError("write_episode: action chunks must hold 8 waypoints");
    for (const auto& a : chunk) {
      for (double v : {a.x, a.y, a.yaw}) put<float>(f, static_cast<float>(v));
    }
  }
  for (Command c : e.commands) put<std::uint8_t>(f, static_cast<std::uint8_t>(c));
  if (!f) throw IoError("write failed for " + path.string());
}

Episode read_episode(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, "DVAE", 4) != 0) throw FormatError(path.string() + ": bad magic");
  const auto version = get<std::uint32_t>(f);
  if (version != kDatasetFormatVersion) throw FormatError(path.string() + ": unsupported version " + std::to_string(version));
  const auto T = get<std::uint32_t>(f);
  const auto H = get<std::uint32_t>(f);
  const auto W = get<std::uint32_t>(f);
  Episode e;
  e.frames.resize(T);
  for (auto& fr : e.frames) {
    fr.height = H;
    fr.width = W;
    fr.cells.resize(static_cast<std::size_t>(H) * W);
    f.read(reinterpret_cast<char*>(fr.cells.data()), static_cast<std::streamsize>(fr.cells.size() * 4));
  }
  e.states.resize(T);
  for (auto& s : e.states) {
    s.x = get<float>(f);
    s.y = get<float>(f);
    s.yaw = get<float>(f);
    s.vx = get<float>(f);
    s.vy = get<float>(f);
  }
  e.expert_actions.assign(T, std::vector<Pose2>(kStoredActionHorizon));
  for (auto& chunk : e.expert_actions) {
    for (auto& a : chunk) {
      a.x = get<float>(f);
      a.y = get<float>(f);
      a.yaw = get<float>(f);
    }
  }
  e.commands.resize(T);
  for (auto& c : e.commands) {
    const auto id = get<std::uint8_t>(f);
    if (id >= kCommandCount) throw FormatError(path.string() + ": invalid command id");
    c = static_cast<Command>(id);
  }
  if (!f) throw FormatError(path.string() + ": truncated");
  f.peek();
  if (!f.eof()) throw FormatError(path.string() + ": trailing bytes");
  return e;
}

void write_manifest(const fs::path& dir, const DatasetManifest& m) {
  json j{{"format_version", m.format_version},
         {"domain", m.domain},
         {"split", m.split},
         {"seed", m.seed},
         {"episode_count", m.files.size()},
         {"episode_seeds", m.episode_seeds},
         {"files", m.files},
         {"expert_collision_episodes", m.expert_collision_episodes},
         {"expert_off_corridor_episodes", m.expert_off_corridor_episodes},
         {"aborted_episodes", m.aborted_episodes},
         {"duration", m.duration},
         {"frame_height", m.frame_height},
         {"frame_width", m.frame_width}};
  if (!m.domain.empty()) j["domain_spec"] = domain_json(domain_by_name(m.domain));
  std::ofstream f(dir / "manifest.json", std::ios::trunc);
  if (!f) throw IoError("cannot write " + (dir / "manifest.json").string());
  f << j.dump(2) << "\n";
}

DatasetManifest read_manifest(const fs::path& dir) {
  std::ifstream f(dir / "manifest.json");
  if (!f) throw IoError("missing dataset manifest in " + dir.string());
  try {
    const json j = json::parse(f);
    DatasetManifest m;
    m.format_version = j.at("format_version").get<std::uint32_t>();
    if (m.format_version != kDatasetFormatVersion) throw FormatError("unsupported dataset version");
    m.domain = j.at("domain").get<std::string>();
    m.split = j.at("split").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.episode_seeds = j.at("episode_seeds").get<std::vector<std::uint64_t>>();
    m.files = j.at("files").get<std::vector<std::string>>();
    m.expert_collision_episodes = j.at("expert_collision_episodes").get<std::size_t>();
    m.expert_off_corridor_episodes = j.at("expert_off_corridor_episodes").get<std::size_t>();
    m.aborted_episodes = j.at("aborted_episodes").get<std::size_t>();
    m.duration = j.at("duration").get<double>();
    m.frame_height = j.at("frame_height").get<std::size_t>();
    m.frame_width = j.at("frame_width").get<std::size_t>();
    if (m.files.size() != m.episode_seeds.size() || j.at("episode_count").get<std::size_t>() != m.files.size()) {
      throw FormatError("manifest episode counts disagree");
    }
    return m;
  } catch (const json::exception& ex) {
    throw FormatError("malformed manifest in " + dir.string() + ": " + ex.what());
  }
}

DatasetManifest generate_dataset(const DomainSpec& domain, std::size_t n_episodes, std::uint64_t seed,
                                 const fs::path& out, const DatasetOptions& options) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create " + out.string() + ": " + ec.message());
  DatasetManifest m;
  m.domain = domain.name;
  m.split = options.split;
  m.seed = seed;
  m.duration = options.scenario.duration;
  m.frame_height = options.frame.height;
  m.frame_width = options.frame.width;
  for (std::size_t i = 0; i < n_episodes; ++i) {
    bool done = false;
    for (std::size_t retry = 0; retry < 8 && !done; ++retry) {
      const std::uint64_t es = episode_seed(seed, i, retry);
      try {
        const Scenario s = sample_scenario(domain, es, options.scenario);
        ExpertRunStats stats;
        const Episode e = simulate_expert_episode(s, options.frame, &stats);
        char name[48];
        std::snprintf(name, sizeof(name), "episode_%05zu.bin", i);
        write_episode(out / name, e);
        m.files.emplace_back(name);
        m.episode_seeds.push_back(es);
        if (stats.collision_steps) ++m.expert_collision_episodes;
        if (stats.off_corridor_steps) ++m.expert_off_corridor_episodes;
        done = true;
      } catch (const PolicyError&) {
        ++m.aborted_episodes;
      }
    }
    if (!done) throw Error("generate_dataset: slot " + std::to_string(i) + " failed repeatedly");
  }
  write_manifest(out, m);
  return m;
}

Dataset load_dataset(const fs::path& dir) {
  Dataset d;
  d.manifest = read_manifest(dir);
  d.episodes.reserve(d.manifest.files.size());
  for (std::size_t i = 0; i < d.manifest.files.size(); ++i) {
    Episode e = read_episode(dir / d.manifest.files[i]);
    e.domain = d.manifest.domain;
    e.scenario_seed = d.manifest.episode_seeds[i];
    d.episodes.push_back(std::move(e));
  }
  return d;
}

std::vector<WindowSample> slice_windows(const Episode& e, std::size_t m, std::size_t n_future, std::size_t k_actions) {
  if (m == 0) throw ParameterError("slice_windows: need at least one history frame");
  const std::size_t ahead = std::max(n_future, k_actions);
  std::vector<WindowSample> out;
  if (e.length() < m + ahead) return out;
  for (std::size_t last = m - 1; last + ahead < e.length(); ++last) {
    WindowSample w;
    w.last = last;
    for (std::size_t i = 0; i < m; ++i) w.history.push_back(last + 1 - m + i);
    for (std::size_t i = 1; i <= n_future; ++i) w.future.push_back(last + i);
    w.state = e.states[last];
    w.command = e.commands[last];
    const Pose2 origin = e.states[last].pose();
    for (std::size_t i = 1; i <= k_actions; ++i) w.actions.push_back(relative(origin, e.states[last + i].pose()));
    out.push_back(std::move(w));
  }
  return out;
}

}  // namespace vawm::sim
