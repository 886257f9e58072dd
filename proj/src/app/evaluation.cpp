// Copyright 2026 The vawm Authors
// SPDX-License-Identifier: Apache-2.0

#include "vawm/app/evaluation.hpp"

#include <atomic>
#include <cstdlib>
#include <thread>

#include "vawm/error.hpp"
#include "vawm/rng.hpp"

namespace vawm::app {

std::vector<std::uint64_t> eval_scenario_seeds(const std::string& domain, std::size_t n, std::uint64_t base) {
  std::vector<std::uint64_t> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(derive_seed(base, "eval-" + domain, i));
  return out;
}

std::size_t worker_count() {
  if (const char* v = std::getenv("VAWM_WORKERS")) {
    const long n = std::strtol(v, nullptr, 10);
    if (n >= 1) return static_cast<std::size_t>(n);
  }
  return 1;
}

namespace {

template <typename F>
void parallel_for(std::size_t n, std::size_t workers, F&& body) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  std::atomic<std::size_t> next{0};
  auto run = [&](std::size_t w) {
    for (std::size_t i = next++; i < n; i = next++) body(w, i);
  };
  if (workers == 1) {
    run(0);
    return;
  }
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run, w);
  for (auto& t : pool) t.join();
}

}  // namespace

ClosedLoopResult evaluate_closed_loop(const std::string& domain, const std::vector<std::uint64_t>& seeds,
                                      const std::function<rollout::Planner()>& make_planner,
                                      const ClosedLoopOptions& o) {
  const sim::DomainSpec spec = sim::domain_by_name(domain);
  sim::ScenarioOptions so;
  so.duration = o.duration;
  rollout::RolloutConfig expert_cfg = o.rollout;
  expert_cfg.execute_k = 1;

  const std::size_t W = std::max<std::size_t>(1, std::min(o.workers, seeds.size()));
  std::vector<rollout::Planner> planners;
  for (std::size_t w = 0; w < W; ++w) planners.push_back(make_planner());

  std::vector<ScenarioResult> results(seeds.size());
  std::vector<rollout::RolloutLog> logs(seeds.size());
  std::vector<char> usable(seeds.size(), 0);
  parallel_for(seeds.size(), W, [&](std::size_t w, std::size_t i) {
    const sim::Scenario s = sim::sample_scenario(spec, seeds[i], so);
    const auto expert = rollout::run_closed_loop(s, rollout::expert_planner(), expert_cfg);
    if (expert.partial) return;
    auto log = rollout::run_closed_loop(s, planners[w], o.rollout);
    ScenarioResult r;
    r.seed = seeds[i];
    r.partial = log.partial;
    r.error = log.error;
    r.scores = metrics::score_rollout(s, log, expert, o.constants);
    r.pdms = metrics::pdms(r.scores);
    results[i] = r;
    if (o.keep_logs) logs[i] = std::move(log);
    usable[i] = 1;
  });

  ClosedLoopResult out;
  out.domain = domain;
  std::vector<metrics::SubScores> subs;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (!usable[i]) {
      ++out.skipped;
      continue;
    }
    subs.push_back(results[i].scores);
    out.scenarios.push_back(results[i]);
    if (o.keep_logs) out.logs.push_back(std::move(logs[i]));
  }
  out.fleet = metrics::fleet(subs);
  return out;
}

metrics::OpenLoopReport evaluate_open_loop(model::VaModel<float>& model, const codec::CodecParams& codec,
                                           const std::vector<sim::Episode>& episodes, const flow::SamplerConfig& sampler,
                                           double duration, std::size_t stride, bool inject_ground_truth) {
  const auto& c = model.config();
  if (stride == 0) throw ParameterError("open-loop stride must be positive");
  sim::ScenarioOptions so;
  so.duration = duration;
  std::vector<sim::Scenario> scenarios;
  scenarios.reserve(episodes.size());
  for (const auto& e : episodes) scenarios.push_back(sim::sample_scenario(sim::domain_by_name(e.domain), e.scenario_seed, so));

  std::vector<metrics::OpenLoopSample> samples;
  for (std::size_t ei = 0; ei < episodes.size(); ++ei) {
    const auto& e = episodes[ei];
    const auto windows = sim::slice_windows(e, c.m, c.n_pred, c.k_actions);
    for (std::size_t wi = 0; wi < windows.size(); wi += stride) {
      const auto& win = windows[wi];
      metrics::OpenLoopSample smp;
      smp.scenario = &scenarios[ei];
      smp.time = e.timestamp(win.last);
      smp.origin = e.states[win.last].pose();
      smp.ground_truth = win.actions;
      if (inject_ground_truth) {
        smp.predicted = win.actions;
      } else {
        rollout::HistoryBuffer buf(c.m);
        for (std::size_t i : win.history) buf.push(e.frames[i], codec::encode_frame(e.frames[i], codec), i);
        buf.state = win.state;
        buf.command = win.command;
        const auto cond = rollout::make_condition(buf, model);
        flow::SamplerConfig sc = sampler;
        sc.seed = rollout::cycle_seed(sampler.seed, e.scenario_seed, win.last);
        const auto y = flow::sample(model, cond, sc);
        smp.predicted = rollout::denormalize_actions(y.actions.ptr(), model.normalizer(), c.k_actions);
      }
      samples.push_back(std::move(smp));
    }
  }
  return metrics::open_loop_metrics(samples);
}

metrics::ConsistencyReport evaluate_consistency(const std::vector<rollout::RolloutLog>& logs,
                                                const codec::CodecParams& codec) {
  return metrics::consistency_report(logs, [&codec](const sim::Frame& f) {
    return codec::decode_frame(codec::encode_frame(f, codec), codec);
  });
}

std::vector<sim::Episode> simulate_episodes(const std::string& domain, std::size_t n, std::uint64_t seed,
                                            double duration) {
  const sim::DomainSpec spec = sim::domain_by_name(domain);
  sim::ScenarioOptions so;
  so.duration = duration;
  std::vector<sim::Episode> out;
  for (std::size_t i = 0; i < n; ++i) {
    bool done = false;
    for (std::size_t retry = 0; retry < 8 && !done; ++retry) {
      try {
        out.push_back(sim::simulate_expert_episode(sim::sample_scenario(spec, sim::episode_seed(seed, i, retry), so)));
        done = true;
      } catch (const PolicyError&) {
      }
    }
    if (!done) throw Error("simulate_episodes: slot " + std::to_string(i) + " failed repeatedly");
  }
  return out;
}

}  // namespace vawm::app
