// Copyright 2026 The vawm Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite. Prints one PASS/FAIL line per criterion and writes the
// measured values to <out>/acceptance.json.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vawm/app/checkpoint.hpp"
#include "vawm/app/config.hpp"
#include "vawm/app/evaluation.hpp"
#include "vawm/app/reports.hpp"
#include "vawm/app/training.hpp"
#include "vawm/codec/codec.hpp"
#include "vawm/diffcore/gradcheck.hpp"
#include "vawm/diffcore/optim.hpp"
#include "vawm/error.hpp"
#include "vawm/flow/flow.hpp"
#include "vawm/metrics/alignment.hpp"
#include "vawm/metrics/closed_loop.hpp"
#include "vawm/model/vamodel.hpp"
#include "vawm/rng.hpp"
#include "vawm/rollout/rollout.hpp"

namespace fs = std::filesystem;
using namespace vawm;
using namespace vawm::app;
using diffcore::NdArray;
using diffcore::Tape;
using model::ModelConfig;
using model::ModelInput;
using model::VaModel;

namespace {

// Tolerances.
constexpr double kGradTol = 1e-4;
constexpr double kGradStep = 1e-5;
constexpr double kGradFloor = 1e-5;
constexpr double kOneSampleRmse = 1e-2;
constexpr double kPdmsExact = 1e-15;
constexpr double kUmeyamaResidual = 1e-9;
constexpr double kAvgL2Rel = 1e-12;
constexpr double kExpertPdms = 0.95;
constexpr double kJointMargin = 0.05;
constexpr double kFewStepGap = 0.02;
constexpr double kTransferL2Ratio = 2.0;
constexpr double kTransferNc = 0.8;
constexpr double kGtConsistency = 0.3;  // m
constexpr double kPredConsistencyRatio = 0.15;

// Training budget shared by the joint, action-only and single-frame models.
constexpr std::size_t kTrainSteps = 6000;
constexpr std::size_t kWarmupSteps = 300;
constexpr double kLambdaAct = 10.0;
constexpr std::size_t kScenarios = 50;
constexpr std::size_t kHeldOut = 20;

struct Outcome {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string summary;
  Json values = Json::object();
  double seconds = 0.0;
};

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

template <typename T>
NdArray<T> randn(diffcore::Shape shape, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  NdArray<T> a(shape);
  for (auto& v : a.values()) v = static_cast<T>(n(rng));
  return a;
}

template <typename T>
ModelInput<T> random_input(const ModelConfig& c, std::size_t B, std::mt19937_64& rng) {
  ModelInput<T> in;
  in.batch = B;
  in.hist_latents = randn<T>({B * c.m * c.l_v(), c.latent_c}, rng);
  in.state = randn<T>({B, 2}, rng);
  for (std::size_t b = 0; b < B; ++b) in.commands.push_back(static_cast<std::uint8_t>(rng() % model::kCommandVocab));
  if (!c.action_only) in.noisy_latents = randn<T>({B * c.fut_tokens(), c.latent_c}, rng);
  in.noisy_actions = randn<T>({B * c.k_actions, 3}, rng);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t b = 0; b < B; ++b) in.s.push_back(u(rng));
  return in;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

// ---------------------------------------------------------------- 1

Outcome autodiff_soundness() {
  Outcome o{1, "autodiff soundness"};
  ModelConfig c;
  c.d = 8;
  c.layers = 1;
  c.heads = 2;
  c.m = 1;
  c.n_pred = 1;
  c.k_actions = 2;
  c.latent_h = 2;
  c.latent_w = 2;
  c.latent_c = 2;
  c.time_features = 8;
  c.ff_mult = 2;
  c.mask_mode = model::MaskMode::causal;
  double worst = 0.0;
  std::size_t coords = 0;
  Json per_seed = Json::array();
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    VaModel<double> m(c, derive_seed(seed, "gc-model"), false);
    std::mt19937_64 rng(derive_seed(seed, "gc-data"));
    const auto in = random_input<double>(c, 2, rng);
    flow::FlowBatch<double> batch;
    batch.cond = {2, in.hist_latents, in.state, in.commands};
    batch.y0_latents = randn<double>({2 * c.fut_tokens(), c.latent_c}, rng);
    batch.y0_actions = randn<double>({2 * c.k_actions, 3}, rng);
    flow::draw_noise(batch, c, derive_seed(seed, "gc-noise"));
    flow::LossConfig lc;
    lc.aux_regression = true;
    const auto r = diffcore::grad_check_params([&](Tape<double>& t) { return flow::training_loss(t, m, batch, lc); },
                                               m.params(), kGradStep, kGradFloor);
    worst = std::max(worst, r.max_rel_error);
    coords = r.coordinates;
    per_seed.push_back(r.max_rel_error);
  }
  o.pass = worst < kGradTol;
  o.values = {{"max_rel_error", worst}, {"per_seed", per_seed}, {"coordinates", coords}, {"h", kGradStep},
              {"floor", kGradFloor}, {"tolerance", kGradTol}};
  o.summary = fmt("max relative error %.3g over %zu coordinates x 10 seeds (< %.0e)", worst, coords, kGradTol);
  return o;
}

// ---------------------------------------------------------------- 2

Outcome one_sample_oracle() {
  Outcome o{2, "flow-matching one-sample oracle"};
  constexpr std::size_t kSteps = 6000, kBatch = 128, kWarm = 50;
  constexpr double kLr = 3e-3;
  ModelConfig c;
  c.d = 32;
  c.layers = 1;
  c.heads = 4;
  c.m = 1;
  c.n_pred = 1;
  c.k_actions = 4;
  c.latent_h = 2;
  c.latent_w = 2;
  c.latent_c = 2;
  c.time_features = 16;
  c.ff_mult = 2;
  VaModel<float> m(c, 1, true);
  std::mt19937_64 rng(7);
  const auto hist = randn<float>({c.m * c.l_v(), c.latent_c}, rng);
  const auto state = randn<float>({1, 2}, rng);
  const auto y0l = randn<float>({c.fut_tokens(), c.latent_c}, rng);
  const auto y0a = randn<float>({c.k_actions, 3}, rng);
  auto tile = [&](const NdArray<float>& a) {
    NdArray<float> out({a.rows() * kBatch, a.cols()});
    for (std::size_t b = 0; b < kBatch; ++b) std::copy_n(a.ptr(), a.size(), out.ptr() + b * a.size());
    return out;
  };
  flow::FlowBatch<float> fb;
  fb.cond = {kBatch, tile(hist), tile(state), std::vector<std::uint8_t>(kBatch, 1)};
  fb.y0_latents = tile(y0l);
  fb.y0_actions = tile(y0a);
  auto opt = diffcore::make_adamw_state(m.params(), {kLr, 0.9, 0.999, 1e-8, 0.0});
  double tail = 0.0;
  for (std::size_t i = 0; i < kSteps; ++i) {
    flow::draw_noise(fb, c, 100 + i);
    m.params().zero_grad();
    Tape<float> t;
    auto loss = flow::fm_loss(t, m, fb);
    t.backward(loss);
    const double cosine = 0.01 + 0.99 * 0.5 * (1.0 + std::cos(std::numbers::pi * double(i) / kSteps));
    diffcore::adamw_step(m.params(), opt, diffcore::warmup_lr(kLr, i, kWarm) * cosine);
    if (i + 200 >= kSteps) tail += loss.value().item() / 200.0;
  }
  const flow::Condition<float> cond{1, hist, state, {1}};
  double se = 0.0;
  std::size_t n = 0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto y = flow::sample(m, cond, flow::SamplerConfig{1, s});
    for (std::size_t i = 0; i < y0l.size(); ++i, ++n) se += std::pow(double(y.latents[i]) - y0l[i], 2);
    for (std::size_t i = 0; i < y0a.size(); ++i, ++n) se += std::pow(double(y.actions[i]) - y0a[i], 2);
  }
  const double rmse = std::sqrt(se / double(n));
  o.pass = rmse < kOneSampleRmse;
  o.values = {{"rmse", rmse}, {"tolerance", kOneSampleRmse}, {"final_loss_mean_last200", tail},
              {"steps", kSteps}, {"batch", kBatch}, {"lr", kLr}};
  o.summary = fmt("1-step RMSE %.4f (< %.0e), training loss %.2e", rmse, kOneSampleRmse, tail);
  return o;
}

// ---------------------------------------------------------------- 3

Outcome formula_exactness() {
  Outcome o{3, "formula exactness"};
  // PDMS against integer arithmetic: binary NC, DAC, TTC, C and EP = k / 1000
  // give nc * dac * (5 k + 1000 (5 ttc + 2 c)) / 12000 exactly.
  double pdms_err = 0.0;
  std::size_t grid = 0;
  for (int nc = 0; nc <= 1; ++nc)
    for (int dac = 0; dac <= 1; ++dac)
      for (int ttc = 0; ttc <= 1; ++ttc)
        for (int cf = 0; cf <= 1; ++cf)
          for (int k = 0; k <= 1000; ++k, ++grid) {
            const long num = long(nc) * dac * (5 * k + 1000 * (5 * ttc + 2 * cf));
            const double exact = double(num) / 12000.0;
            const double got = metrics::pdms({double(nc), double(dac), double(ttc), double(cf), k / 1000.0});
            pdms_err = std::max(pdms_err, std::abs(got - exact));
          }
  bool rejects = true;
  for (const metrics::SubScores bad : {metrics::SubScores{0.5, 1, 1, 1, 1}, metrics::SubScores{1, 1, 1, 1, 1.5},
                                       metrics::SubScores{1, 1, 1, 1, -0.1}}) {
    try {
      metrics::pdms(bad);
      rejects = false;
    } catch (const ParameterError&) {
    }
  }

  // Interpolation endpoints are bitwise, the midpoint path against long double.
  std::mt19937_64 rng(3);
  const auto y0 = randn<double>({5, 3}, rng), eps = randn<double>({5, 3}, rng);
  const auto at0 = flow::interpolate(y0, eps, 0.0), at1 = flow::interpolate(y0, eps, 1.0);
  bool endpoints = at0.y_s == eps && at1.y_s == y0;
  double interp_err = 0.0;
  for (double s : {0.1, 0.25, 0.5, 0.9}) {
    const auto r = flow::interpolate(y0, eps, s);
    for (std::size_t i = 0; i < y0.size(); ++i) {
      const long double ref = (1.0L - s) * eps[i] + (long double)s * y0[i];
      interp_err = std::max(interp_err, double(std::abs(ref - r.y_s[i])));
      endpoints = endpoints && r.velocity[i] == y0[i] - eps[i];
    }
  }

  // avg_l2 against the direct mean of hypotenuses.
  double l2_err = 0.0;
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<sim::Vec2> a(3 + trial % 9), b(a.size());
    long double sum = 0.0L;
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = {u(rng), u(rng)};
      b[i] = {u(rng), u(rng)};
      sum += std::hypot((long double)a[i].x - b[i].x, (long double)a[i].y - b[i].y);
    }
    const long double ref = sum / a.size();
    l2_err = std::max(l2_err, double(std::abs(metrics::avg_l2(a, b) - ref) / ref));
  }

  // Umeyama on noiseless similarities.
  double residual = 0.0, param_err = 0.0;
  std::uniform_real_distribution<double> ang(-std::numbers::pi, std::numbers::pi), sc(0.2, 5.0);
  for (int trial = 0; trial < 100; ++trial) {
    const double s = sc(rng), th = ang(rng);
    const sim::Vec2 tr{u(rng), u(rng)};
    std::vector<sim::Vec2> src(3 + trial % 10), dst;
    for (auto& p : src) {
      p = {u(rng), u(rng)};
      dst.push_back({s * (std::cos(th) * p.x - std::sin(th) * p.y) + tr.x,
                     s * (std::sin(th) * p.x + std::cos(th) * p.y) + tr.y});
    }
    const auto al = metrics::umeyama_align(src, dst);
    residual = std::max(residual, al.rms);
    const double dth = std::remainder(al.transform.rotation - th, 2.0 * std::numbers::pi);
    param_err = std::max({param_err, std::abs(al.transform.scale - s), std::abs(dth),
                          std::abs(al.transform.translation.x - tr.x), std::abs(al.transform.translation.y - tr.y)});
  }
  o.pass = pdms_err <= kPdmsExact && rejects && endpoints && interp_err <= 1e-15 && l2_err <= kAvgL2Rel &&
           residual < kUmeyamaResidual && param_err < kUmeyamaResidual;
  o.values = {{"pdms_max_abs_error", pdms_err}, {"pdms_grid_points", grid}, {"pdms_rejects_out_of_range", rejects},
              {"interpolate_endpoints_exact", endpoints},
              {"interpolate_max_error", interp_err}, {"avg_l2_max_rel_error", l2_err},
              {"umeyama_max_rms", residual}, {"umeyama_max_param_error", param_err}};
  o.summary = fmt("pdms err %.1e over %zu grid points, interpolate %s (%.1e), avg_l2 rel %.1e, umeyama rms %.1e params %.1e",
                  pdms_err, grid, endpoints ? "exact" : "INEXACT", interp_err, l2_err, residual, param_err);
  return o;
}

// ---------------------------------------------------------------- shared state

struct Context {
  fs::path out;
  bool reuse = false;
  RunConfig base;
  std::vector<sim::Episode> train_episodes;
  std::optional<codec::CodecParams> codec;
  std::map<std::string, Bundle> bundles;
  std::map<std::string, ClosedLoopResult> closed;
  std::map<std::string, metrics::OpenLoopReport> open;

  ClosedLoopOptions options(const RunConfig& c, bool logs) const {
    ClosedLoopOptions o;
    o.rollout = c.rollout;
    o.constants = c.metrics;
    o.duration = c.data.duration;
    o.keep_logs = logs;
    o.workers = worker_count();
    return o;
  }

  ReportHeader header(const std::string& cmd, const std::string& domain, const RunConfig& c, const std::string& hash) const {
    ReportHeader h;
    h.command = cmd;
    h.domain = domain;
    h.config_hash = config_hash(c);
    h.parameter_hash = hash;
    h.constants = c.metrics;
    h.extra = {{"sampler_steps", c.sampler.steps}, {"execute_k", c.rollout.execute_k},
               {"continuation", rollout::continuation_name(c.rollout.continuation)}};
    return h;
  }

  const codec::CodecParams& shared_codec() {
    if (!codec) {
      const fs::path p = out / "codec.dvck";
      if (reuse && fs::exists(p)) {
        codec = codec_from_checkpoint(load_checkpoint(p));
      } else {
        std::printf("  training codec on %zu episodes\n", train_episodes.size());
        std::fflush(stdout);
        codec = codec::train_codec(all_frames(train_episodes), base.codec_train, base.codec).params;
        save_checkpoint(p, codec_checkpoint(*codec, base));
      }
    }
    return *codec;
  }

  Bundle& bundle(const std::string& label, RunConfig c) {
    if (auto it = bundles.find(label); it != bundles.end()) return it->second;
    c.sync_continuation();
    const fs::path p = out / (label + ".dvck");
    if (reuse && fs::exists(p)) {
      Bundle b = load_bundle(p);
      if (config_hash(b.config) == config_hash(c)) {
        std::printf("  reusing %s (%s)\n", label.c_str(), parameter_hash(b).c_str());
        return bundles.emplace(label, std::move(b)).first->second;
      }
    }
    const auto t0 = Clock::now();
    TrainHooks hooks;
    hooks.on_step = [&](const TrainProgress& pr) {
      if (pr.step % 500 == 0) std::printf("  %s step %zu loss %.4f (%.0f s)\n", label.c_str(), pr.step, pr.loss, since(t0));
      std::fflush(stdout);
    };
    std::vector<double> curve;
    Bundle b = train_bundle(c, train_episodes, hooks, &curve, &shared_codec());
    save_checkpoint(p, bundle_checkpoint(b));
    std::string csv = "step,loss\n";
    for (std::size_t i = 0; i < curve.size(); ++i) csv += fmt("%zu,%.9g\n", i, curve[i]);
    write_text(out / (label + "_loss.csv"), csv);
    std::printf("  trained %s in %.0f s, parameter hash %s\n", label.c_str(), since(t0), parameter_hash(b).c_str());
    return bundles.emplace(label, std::move(b)).first->second;
  }

  RunConfig config_for(const std::string& label) const {
    RunConfig c = base;
    if (label == "action_only") c.model.action_only = true;
    if (label == "single_frame") c.model.m = 1;
    c.sync_continuation();
    return c;
  }

  // Closed loop for a trained model at `steps` sampler steps on `domain`.
  const ClosedLoopResult& closed_loop(const std::string& label, const std::string& domain, std::size_t steps) {
    const std::string key = label + "/" + domain + "/" + std::to_string(steps);
    if (auto it = closed.find(key); it != closed.end()) return it->second;
    RunConfig c = config_for(label);
    Bundle& b = bundle(label, c);
    c.sampler.steps = steps;
    const auto t0 = Clock::now();
    const bool logs = label == "joint" && domain == "A" && steps == base.sampler.steps;
    auto r = evaluate_closed_loop(domain, eval_scenario_seeds(domain, kScenarios),
                                  [&] { return rollout::model_planner(*b.model, b.codec, c.sampler); }, options(c, logs));
    const std::string stem = "closed_loop_" + label + "_" + domain + "_steps" + std::to_string(steps);
    const ReportHeader h = header("acceptance", domain, c, parameter_hash(b));
    write_json(out / (stem + ".json"), closed_loop_json(r, h));
    write_text(out / (stem + ".csv"), closed_loop_csv(r, h));
    std::printf("  %s on %s, %zu steps: PDMS %.4f NC %.3f DAC %.3f TTC %.3f C %.3f EP %.3f (%.0f s)\n", label.c_str(),
                domain.c_str(), steps, r.fleet.pdms, r.fleet.mean.nc, r.fleet.mean.dac, r.fleet.mean.ttc,
                r.fleet.mean.comfort, r.fleet.mean.ep, since(t0));
    std::fflush(stdout);
    return closed.emplace(key, std::move(r)).first->second;
  }

  const metrics::OpenLoopReport& open_loop(const std::string& label, const std::string& domain) {
    const std::string key = label + "/" + domain;
    if (auto it = open.find(key); it != open.end()) return it->second;
    const RunConfig c = config_for(label);
    Bundle& b = bundle(label, c);
    const auto held = simulate_episodes(domain, kHeldOut, derive_seed(c.data.seed, "held-out"), c.data.duration);
    return open.emplace(key, evaluate_open_loop(*b.model, b.codec, held, c.sampler, c.data.duration)).first->second;
  }
};

Json fleet_json(const metrics::FleetScores& f) {
  return {{"PDMS", f.pdms}, {"NC", f.mean.nc}, {"DAC", f.mean.dac}, {"TTC", f.mean.ttc}, {"Comf.", f.mean.comfort},
          {"EP", f.mean.ep}, {"scenarios", f.scenarios}};
}

// ---------------------------------------------------------------- 4

Outcome expert_calibration(Context& ctx) {
  Outcome o{4, "benchmark calibration"};
  const RunConfig& c = ctx.base;
  const auto r = evaluate_closed_loop("A", eval_scenario_seeds("A", kScenarios), [] { return rollout::expert_planner(); },
                                      ctx.options(c, false));
  const ReportHeader h = ctx.header("acceptance", "A", c, "expert");
  write_json(ctx.out / "closed_loop_expert_A.json", closed_loop_json(r, h));
  write_text(ctx.out / "closed_loop_expert_A.csv", closed_loop_csv(r, h));
  o.pass = r.fleet.pdms >= kExpertPdms && r.fleet.scenarios == kScenarios;
  o.values = fleet_json(r.fleet);
  o.values["skipped"] = r.skipped;
  o.values["threshold"] = kExpertPdms;
  o.summary = fmt("expert fleet PDMS %.4f on %zu scenarios (>= %.2f)", r.fleet.pdms, r.fleet.scenarios, kExpertPdms);
  return o;
}

// ---------------------------------------------------------------- 5-9

Outcome joint_vs_action_only(Context& ctx) {
  Outcome o{5, "joint beats action-only"};
  const auto& j = ctx.closed_loop("joint", "A", ctx.base.sampler.steps);
  const auto& a = ctx.closed_loop("action_only", "A", ctx.base.sampler.steps);
  const double gap = j.fleet.pdms - a.fleet.pdms;
  o.pass = gap >= kJointMargin;
  o.values = {{"joint", fleet_json(j.fleet)}, {"action_only", fleet_json(a.fleet)}, {"gap", gap}, {"margin", kJointMargin}};
  o.summary = fmt("joint PDMS %.4f vs action-only %.4f, gap %+.4f (>= %.2f)", j.fleet.pdms, a.fleet.pdms, gap, kJointMargin);
  return o;
}

Outcome few_step_sampling(Context& ctx) {
  Outcome o{6, "few-step sampling"};
  const double p1 = ctx.closed_loop("joint", "A", 1).fleet.pdms;
  const double p2 = ctx.closed_loop("joint", "A", 2).fleet.pdms;
  const double p8 = ctx.closed_loop("joint", "A", 8).fleet.pdms;
  o.pass = std::abs(p2 - p8) <= kFewStepGap;
  o.values = {{"steps_1", p1}, {"steps_2", p2}, {"steps_8", p8}, {"gap_2_vs_8", p2 - p8}, {"margin", kFewStepGap}};
  o.summary = fmt("PDMS 2-step %.4f vs 8-step %.4f, |gap| %.4f (<= %.2f); 1-step %.4f", p2, p8, std::abs(p2 - p8),
                  kFewStepGap, p1);
  return o;
}

Outcome continuation_ablation(Context& ctx) {
  Outcome o{7, "continuation ablation"};
  const auto& m4 = ctx.closed_loop("joint", "A", ctx.base.sampler.steps);
  const auto& m1 = ctx.closed_loop("single_frame", "A", ctx.base.sampler.steps);
  o.pass = m4.fleet.pdms >= m1.fleet.pdms;
  o.values = {{"buffer_m4", fleet_json(m4.fleet)}, {"single_frame_m1", fleet_json(m1.fleet)}};
  o.summary = fmt("m=4 PDMS %.4f vs m=1 %.4f", m4.fleet.pdms, m1.fleet.pdms);
  return o;
}

Outcome zero_shot_transfer(Context& ctx) {
  Outcome o{8, "zero-shot transfer"};
  const std::string hash_a = parameter_hash(ctx.bundle("joint", ctx.config_for("joint")));
  const auto& ol_a = ctx.open_loop("joint", "A");
  const auto& ol_b = ctx.open_loop("joint", "B");
  const auto& cl_b = ctx.closed_loop("joint", "B", ctx.base.sampler.steps);
  const std::string hash_b = parameter_hash(ctx.bundle("joint", ctx.config_for("joint")));
  const RunConfig c = ctx.config_for("joint");
  const ReportHeader h = ctx.header("acceptance", "A,B", c, hash_b);
  const std::vector<std::pair<std::string, metrics::OpenLoopReport>> rows{{"A", ol_a}, {"B (zero-shot)", ol_b}};
  write_json(ctx.out / "open_loop_joint.json", open_loop_json(rows, h));
  write_text(ctx.out / "open_loop_joint.csv", open_loop_csv(rows, h));
  const double ratio = ol_b.l2_avg / ol_a.l2_avg;
  o.pass = hash_a == hash_b && ratio <= kTransferL2Ratio && cl_b.fleet.mean.nc >= kTransferNc;
  o.values = {{"l2_avg_A", ol_a.l2_avg}, {"l2_avg_B", ol_b.l2_avg}, {"ratio", ratio}, {"cr_avg_A", ol_a.collision_avg},
              {"cr_avg_B", ol_b.collision_avg}, {"closed_loop_B", fleet_json(cl_b.fleet)}, {"hash_A", hash_a},
              {"hash_B", hash_b}};
  o.summary = fmt("Avg L2 B %.3f / A %.3f = %.2fx (<= %.1f), NC on B %.3f (>= %.1f), hash %s", ol_b.l2_avg, ol_a.l2_avg,
                  ratio, kTransferL2Ratio, cl_b.fleet.mean.nc, kTransferNc, hash_a == hash_b ? "identical" : "CHANGED");
  return o;
}

Outcome consistency_protocol(Context& ctx) {
  Outcome o{9, "consistency protocol"};
  const auto& r = ctx.closed_loop("joint", "A", ctx.base.sampler.steps);
  const Bundle& b = ctx.bundle("joint", ctx.config_for("joint"));
  const auto rep = evaluate_consistency(r.logs, b.codec);
  const ReportHeader h = ctx.header("acceptance", "A", ctx.config_for("joint"), parameter_hash(b));
  write_json(ctx.out / "consistency_joint_A.json", consistency_json(rep, h));
  write_text(ctx.out / "consistency_joint_A.csv", consistency_csv(rep, h));
  o.pass = rep.gt_l2 <= kGtConsistency && rep.pred_ratio <= kPredConsistencyRatio && !rep.scenarios.empty();
  o.values = {{"gt_l2", rep.gt_l2}, {"pred_l2", rep.pred_l2}, {"pred_ratio", rep.pred_ratio},
              {"scenarios", rep.scenarios.size()}, {"skipped_cycles", rep.skipped_cycles}};
  o.summary = fmt("GT column %.3f m (<= %.1f), predicted %.3f m = %.3f of path (<= %.2f) over %zu scenarios", rep.gt_l2,
                  kGtConsistency, rep.pred_l2, rep.pred_ratio, kPredConsistencyRatio, rep.scenarios.size());
  return o;
}

// ---------------------------------------------------------------- 10

Outcome determinism(const fs::path& out) {
  Outcome o{10, "determinism"};
  RunConfig c = default_run_config();
  c.train.steps = 200;
  c.train.warmup_steps = 20;
  c.data.train_episodes = 16;
  c.codec_train.epochs = 2;
  c.data.eval_scenarios = 4;
  c.sync_continuation();
  const std::vector<std::string> files{"model.dvck", "closed_loop_A.json", "closed_loop_A.csv", "open_loop.json",
                                       "open_loop.csv"};
  auto run = [&](const fs::path& dir) {
    fs::create_directories(dir);
    const auto eps = simulate_episodes("A", c.data.train_episodes, c.data.seed, c.data.duration);
    Bundle b = train_bundle(c, eps);
    save_checkpoint(dir / "model.dvck", bundle_checkpoint(b));
    Bundle l = load_bundle(dir / "model.dvck");
    ClosedLoopOptions opt;
    opt.rollout = c.rollout;
    opt.constants = c.metrics;
    opt.duration = c.data.duration;
    const auto r = evaluate_closed_loop("A", eval_scenario_seeds("A", c.data.eval_scenarios),
                                        [&] { return rollout::model_planner(*l.model, l.codec, c.sampler); }, opt);
    ReportHeader h;
    h.command = "determinism";
    h.domain = "A";
    h.config_hash = config_hash(c);
    h.parameter_hash = parameter_hash(l);
    h.constants = c.metrics;
    write_json(dir / "closed_loop_A.json", closed_loop_json(r, h));
    write_text(dir / "closed_loop_A.csv", closed_loop_csv(r, h));
    const auto held = simulate_episodes("A", 4, derive_seed(c.data.seed, "held-out"), c.data.duration);
    const std::vector<std::pair<std::string, metrics::OpenLoopReport>> rows{
        {"A", evaluate_open_loop(*l.model, l.codec, held, c.sampler, c.data.duration)}};
    write_json(dir / "open_loop.json", open_loop_json(rows, h));
    write_text(dir / "open_loop.csv", open_loop_csv(rows, h));
    return parameter_hash(l);
  };
  const std::string h1 = run(out / "determinism_1");
  const std::string h2 = run(out / "determinism_2");
  Json cmp = Json::object();
  bool same = h1 == h2;
  for (const auto& f : files) {
    const std::string a = slurp(out / "determinism_1" / f), b = slurp(out / "determinism_2" / f);
    cmp[f] = {{"bytes", a.size()}, {"identical", !a.empty() && a == b}};
    same = same && !a.empty() && a == b;
  }
  o.pass = same;
  o.values = {{"files", cmp}, {"hash_1", h1}, {"hash_2", h2}, {"steps", c.train.steps}};
  o.summary = fmt("%zu artefacts compared byte for byte: %s (hash %s)", files.size(), same ? "identical" : "DIFFERENT",
                  h1.c_str());
  return o;
}

// ---------------------------------------------------------------- 11

Outcome model_invariants() {
  Outcome o{11, "condition immutability and causal mask"};
  std::size_t input_violations = 0, cond_violations = 0, causal_violations = 0, live_failures = 0;
  std::mt19937_64 rng(11);
  for (std::size_t trial = 0; trial < 100; ++trial) {
    ModelConfig c;
    c.d = 8 * (1 + rng() % 3);
    c.heads = 2;
    c.layers = 1 + rng() % 2;
    c.m = 1 + rng() % 4;
    c.n_pred = 1 + rng() % 3;
    c.k_actions = 2 + rng() % 4;
    c.latent_h = 2;
    c.latent_w = 2;
    c.latent_c = 2 + rng() % 2;
    c.time_features = 8;
    c.ff_mult = 2;
    c.mask_mode = model::MaskMode::causal;
    const std::size_t B = 1 + rng() % 3;
    VaModel<double> m(c, rng(), false);
    auto in = random_input<double>(c, B, rng);
    const auto pristine = in;

    // Condition tokens stay fixed across sampler steps while the target block moves.
    NdArray<double> cond0;
    for (std::size_t k = 0; k < 4; ++k) {
      for (auto& s : in.s) s = double(k) / 4.0;
      if (k > 0) {
        in.noisy_latents = randn<double>(in.noisy_latents.shape(), rng);
        in.noisy_actions = randn<double>(in.noisy_actions.shape(), rng);
      }
      const auto snapshot = in;
      Tape<double> t;
      model::ForwardTrace<double> tr;
      m.forward(t, in, &tr);
      if (!(in.hist_latents == snapshot.hist_latents && in.state == snapshot.state &&
            in.noisy_latents == snapshot.noisy_latents && in.noisy_actions == snapshot.noisy_actions &&
            in.commands == snapshot.commands && in.s == snapshot.s))
        ++input_violations;
      if (k == 0) cond0 = tr.cond_input;
      else if (!(tr.cond_input == cond0)) ++cond_violations;
    }
    if (!(in.hist_latents == pristine.hist_latents && in.state == pristine.state)) ++input_violations;

    // Layer 1: future-video rows never see the action tokens, action rows do.
    Tape<double> t1;
    model::ForwardTrace<double> a;
    m.forward(t1, in, &a);
    auto perturbed = in;
    perturbed.noisy_actions = randn<double>(in.noisy_actions.shape(), rng);
    Tape<double> t2;
    model::ForwardTrace<double> b;
    m.forward(t2, perturbed, &b);
    const std::size_t L = c.length();
    bool act_live = false;
    for (std::size_t s = 0; s < B; ++s) {
      for (std::size_t i = c.l_cond(); i < L; ++i) {
        bool same = true;
        for (std::size_t j = 0; j < c.d; ++j)
          same = same && a.self_attention[0].at(s * L + i, j) == b.self_attention[0].at(s * L + i, j);
        if (i < c.l_cond() + c.fut_tokens() && !same) ++causal_violations;
        if (i >= c.l_cond() + c.fut_tokens() && !same) act_live = true;
      }
    }
    if (!act_live) ++live_failures;
  }
  o.pass = input_violations == 0 && cond_violations == 0 && causal_violations == 0 && live_failures == 0;
  o.values = {{"trials", 100}, {"input_mutations", input_violations}, {"condition_changes", cond_violations},
              {"causal_leaks", causal_violations}, {"dead_action_rows", live_failures}};
  o.summary = fmt("100 trials: %zu input mutations, %zu condition changes across steps, %zu layer-1 leaks, %zu dead action rows",
                  input_violations, cond_violations, causal_violations, live_failures);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string out = "acceptance_out";
  std::vector<int> only;
  bool reuse = false;
  app.add_option("--out", out, "directory for reports and checkpoints");
  app.add_option("--only", only, "criterion ids to run")->check(CLI::Range(1, 11));
  app.add_flag("--reuse", reuse, "load trained models from --out when their configuration matches");
  CLI11_PARSE(app, argc, argv);
  const std::set<int> selected(only.begin(), only.end());
  auto want = [&](int id) { return selected.empty() || selected.count(id) > 0; };

  fs::create_directories(out);
  Context ctx;
  ctx.out = out;
  ctx.reuse = reuse;
  ctx.base = default_run_config();
  ctx.base.train.steps = kTrainSteps;
  ctx.base.train.warmup_steps = kWarmupSteps;
  ctx.base.train.loss.lambda_act = kLambdaAct;
  ctx.base.data.eval_scenarios = kScenarios;
  ctx.base.sync_continuation();

  const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
      {1, [] { return autodiff_soundness(); }},
      {2, [] { return one_sample_oracle(); }},
      {3, [] { return formula_exactness(); }},
      {4, [&] { return expert_calibration(ctx); }},
      {5, [&] { return joint_vs_action_only(ctx); }},
      {6, [&] { return few_step_sampling(ctx); }},
      {7, [&] { return continuation_ablation(ctx); }},
      {8, [&] { return zero_shot_transfer(ctx); }},
      {9, [&] { return consistency_protocol(ctx); }},
      {10, [&] { return determinism(fs::path(out)); }},
      {11, [] { return model_invariants(); }},
  };

  bool needs_models = false;
  for (int id = 5; id <= 9; ++id) needs_models = needs_models || want(id);
  if (needs_models)
    ctx.train_episodes = simulate_episodes("A", ctx.base.data.train_episodes, ctx.base.data.seed, ctx.base.data.duration);

  std::vector<Outcome> results;
  for (const auto& [id, run] : criteria) {
    if (!want(id)) continue;
    std::printf("criterion %d ...\n", id);
    std::fflush(stdout);
    const auto t0 = Clock::now();
    Outcome r;
    try {
      r = run();
    } catch (const std::exception& e) {
      r.id = id;
      r.name = "error";
      r.summary = std::string("exception: ") + e.what();
    }
    r.seconds = since(t0);
    results.push_back(r);
  }

  Json report = Json::array();
  std::size_t passed = 0;
  std::printf("\n");
  for (const auto& r : results) {
    std::printf("%s  %2d %-40s %s [%.0f s]\n", r.pass ? "PASS" : "FAIL", r.id, r.name.c_str(), r.summary.c_str(), r.seconds);
    passed += r.pass ? 1 : 0;
    report.push_back({{"id", r.id}, {"name", r.name}, {"pass", r.pass}, {"summary", r.summary}, {"values", r.values},
                      {"seconds", r.seconds}});
  }
  std::printf("%zu/%zu criteria passed\n", passed, results.size());
  write_json(fs::path(out) / "acceptance.json", Json{{"train_steps", kTrainSteps}, {"scenarios", kScenarios}, {"criteria", report}});
  return passed == results.size() ? 0 : 1;
}
