// Copyright 2026 The vawm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "vawm/app/checkpoint.hpp"
#include "vawm/metrics/closed_loop.hpp"
#include "vawm/metrics/consistency.hpp"
#include "vawm/metrics/open_loop.hpp"
#include "vawm/sim/dataset.hpp"

namespace vawm::app {

/// Fixed evaluation suite: scenario seeds for a domain, independent of the
/// training data streams.
std::vector<std::uint64_t> eval_scenario_seeds(const std::string& domain, std::size_t n, std::uint64_t base = 0);

/// Worker count from VAWM_WORKERS (default 1).
std::size_t worker_count();

struct ScenarioResult {
  std::uint64_t seed = 0;
  metrics::SubScores scores;
  double pdms = 0.0;
  bool partial = false;
  std::string error;
};

struct ClosedLoopResult {
  std::string domain;
  std::vector<ScenarioResult> scenarios;
  metrics::FleetScores fleet;
  std::vector<rollout::RolloutLog> logs;  // filled when requested
  std::size_t skipped = 0;                // scenarios whose expert reference failed
};

struct ClosedLoopOptions {
  rollout::RolloutConfig rollout;
  metrics::MetricConstants constants;
  double duration = 12.0;
  bool keep_logs = false;
  std::size_t workers = 1;
};

/// `make_planner` is called once per worker.
ClosedLoopResult evaluate_closed_loop(const std::string& domain, const std::vector<std::uint64_t>& seeds,
                                      const std::function<rollout::Planner()>& make_planner,
                                      const ClosedLoopOptions& options);

/// One-shot predictions on held-out windows (every `stride`-th window).
/// With `inject_ground_truth` the realised actions are scored against themselves.
metrics::OpenLoopReport evaluate_open_loop(model::VaModel<float>& model, const codec::CodecParams& codec,
                                           const std::vector<sim::Episode>& episodes, const flow::SamplerConfig& sampler,
                                           double duration, std::size_t stride = 4, bool inject_ground_truth = false);

metrics::ConsistencyReport evaluate_consistency(const std::vector<rollout::RolloutLog>& logs,
                                                const codec::CodecParams& codec);

/// Simulated episodes for a domain, seeded like generate_dataset.
std::vector<sim::Episode> simulate_episodes(const std::string& domain, std::size_t n, std::uint64_t seed,
                                            double duration);

}  // namespace vawm::app
