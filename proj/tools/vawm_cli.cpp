// Copyright 2026 The vawm Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "vawm/app/evaluation.hpp"
#include "vawm/app/reports.hpp"
#include "vawm/app/training.hpp"
#include "vawm/error.hpp"
#include "vawm/rng.hpp"

namespace fs = std::filesystem;
using namespace vawm;
using namespace vawm::app;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kGate = 3 };

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::string domain = "A";
};

// Overrides mirrored from RunConfig fields.
struct Overrides {
  std::optional<std::size_t> steps, batch, micro_batch, layers, d, heads, m, n_pred, sampler_steps, execute_k,
      train_episodes, eval_scenarios, codec_epochs, warmup;
  std::optional<double> lr, lambda_act, duration;
  std::optional<std::string> mask;
  bool action_only = false;
  bool domain_mix = false;
  bool aux_regression = false;

  void attach(CLI::App* app) {
    app->add_option("--steps", steps, "training steps");
    app->add_option("--batch", batch, "batch size");
    app->add_option("--micro-batch", micro_batch, "micro-batch for gradient accumulation");
    app->add_option("--warmup", warmup, "warm-up steps");
    app->add_option("--lr", lr, "base learning rate");
    app->add_option("--layers", layers, "transformer blocks");
    app->add_option("--width", d, "model width d");
    app->add_option("--heads", heads, "attention heads");
    app->add_option("--history", m, "history frames m (1 = single-frame continuation)");
    app->add_option("--future-frames", n_pred, "predicted future frames");
    app->add_option("--sampler-steps", sampler_steps, "Euler steps");
    app->add_option("--execute-k", execute_k, "actions executed per cycle");
    app->add_option("--train-episodes", train_episodes, "training episodes");
    app->add_option("--scenarios", eval_scenarios, "evaluation scenarios");
    app->add_option("--codec-epochs", codec_epochs, "codec epochs");
    app->add_option("--lambda-act", lambda_act, "weight of action elements in the loss");
    app->add_option("--duration", duration, "scenario duration (s)");
    app->add_option("--mask", mask, "bidirectional | causal");
    app->add_flag("--action-only", action_only, "drop the video target");
    app->add_flag("--domain-mix", domain_mix, "add domain-B episodes to training");
    app->add_flag("--aux-regression", aux_regression, "add the direct action regression term");
  }

  void apply(RunConfig& c) const {
    if (steps) c.train.steps = *steps;
    if (batch) c.train.batch = *batch;
    if (micro_batch) c.train.micro_batch = *micro_batch;
    if (warmup) c.train.warmup_steps = *warmup;
    if (lr) c.train.lr = *lr;
    if (layers) c.model.layers = *layers;
    if (d) c.model.d = *d;
    if (heads) c.model.heads = *heads;
    if (m) c.model.m = *m;
    if (n_pred) c.model.n_pred = *n_pred;
    if (sampler_steps) c.sampler.steps = *sampler_steps;
    if (execute_k) c.rollout.execute_k = *execute_k;
    if (train_episodes) c.data.train_episodes = *train_episodes;
    if (eval_scenarios) c.data.eval_scenarios = *eval_scenarios;
    if (codec_epochs) c.codec_train.epochs = *codec_epochs;
    if (lambda_act) c.train.loss.lambda_act = *lambda_act;
    if (duration) c.data.duration = *duration;
    if (mask) c.model.mask_mode = model::mask_mode_from_name(*mask);
    if (action_only) c.model.action_only = true;
    if (domain_mix) c.data.domain_mix = true;
    if (aux_regression) c.train.loss.aux_regression = true;
    const auto cont = c.rollout.execute_k;
    c.sync_continuation();
    c.rollout.execute_k = cont;
  }
};

RunConfig resolve(const Globals& g, const Overrides& o) {
  RunConfig c = g.config_path.empty() ? default_run_config() : load_run_config(g.config_path);
  o.apply(c);
  if (g.seed) {
    c.data.seed = *g.seed;
    c.train.seed = *g.seed;
    c.codec_train.seed = *g.seed;
    c.sampler.seed = *g.seed;
  }
  c.validate();
  return c;
}

std::vector<sim::Episode> load_episodes(const std::vector<std::string>& dirs) {
  std::vector<sim::Episode> out;
  for (const auto& d : dirs) {
    auto ds = sim::load_dataset(d);
    for (auto& e : ds.episodes) out.push_back(std::move(e));
  }
  return out;
}

ReportHeader header_for(const std::string& command, const std::string& domain, const RunConfig& c,
                        const std::string& param_hash) {
  ReportHeader h;
  h.command = command;
  h.domain = domain;
  h.config_hash = config_hash(c);
  h.parameter_hash = param_hash;
  h.constants = c.metrics;
  h.extra = {{"sampler_steps", c.sampler.steps}, {"execute_k", c.rollout.execute_k},
             {"continuation", rollout::continuation_name(c.rollout.continuation)}};
  return h;
}

void print_fleet(const ClosedLoopResult& r) {
  std::printf("domain %s: %zu scenarios (%zu skipped)  NC %.3f  DAC %.3f  TTC %.3f  Comf. %.3f  EP %.3f  PDMS %.4f\n",
              r.domain.c_str(), r.fleet.scenarios, r.skipped, r.fleet.mean.nc, r.fleet.mean.dac, r.fleet.mean.ttc,
              r.fleet.mean.comfort, r.fleet.mean.ep, r.fleet.pdms);
}

ClosedLoopOptions loop_options(const RunConfig& c, bool keep_logs) {
  ClosedLoopOptions o;
  o.rollout = c.rollout;
  o.constants = c.metrics;
  o.duration = c.data.duration;
  o.keep_logs = keep_logs;
  o.workers = worker_count();
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint video-action world model: data, training and evaluation"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "RunConfig JSON document");
  app.add_option("--seed", g.seed, "seed for data, training and sampling");
  app.add_option("--out", g.out, "output directory or file");
  app.add_option("--domain", g.domain, "domain A or B")->check(CLI::IsMember({"A", "B"}));

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "simulate expert episodes");
  Overrides gen_o;
  gen_o.attach(gen);
  std::optional<std::size_t> episodes;
  std::string split = "train";
  gen->add_option("--episodes", episodes, "episode count");
  gen->add_option("--split", split, "split label");

  // train-codec
  auto* tcodec = app.add_subcommand("train-codec", "train the frame codec");
  Overrides tc_o;
  tc_o.attach(tcodec);
  std::vector<std::string> data_dirs;
  tcodec->add_option("--data", data_dirs, "dataset directories")->required();

  // train
  auto* train = app.add_subcommand("train", "train codec (unless given) and the video-action model");
  Overrides tr_o;
  tr_o.attach(train);
  std::string codec_path;
  train->add_option("--data", data_dirs, "dataset directories")->required();
  train->add_option("--codec", codec_path, "pretrained codec checkpoint");

  // eval-closed
  auto* evc = app.add_subcommand("eval-closed", "closed-loop PDMS on the evaluation suite");
  Overrides ec_o;
  ec_o.attach(evc);
  std::string ckpt;
  bool expert = false;
  std::optional<double> gate;
  evc->add_option("--checkpoint", ckpt, "model bundle");
  evc->add_flag("--expert", expert, "score the privileged expert instead of a model");
  evc->add_option("--gate", gate, "minimum fleet PDMS (exit 3 below)");

  // eval-open
  auto* evo = app.add_subcommand("eval-open", "open-loop L2 / collision rate on held-out windows");
  Overrides eo_o;
  eo_o.attach(evo);
  bool inject_gt = false;
  std::size_t held_episodes = 20;
  std::size_t stride = 4;
  evo->add_option("--checkpoint", ckpt, "model bundle")->required();
  evo->add_option("--held-out", held_episodes, "held-out episodes per domain");
  evo->add_option("--stride", stride, "window stride");
  evo->add_flag("--inject-gt", inject_gt, "score ground-truth actions as predictions");

  // consistency
  auto* cons = app.add_subcommand("consistency", "video-trajectory consistency");
  Overrides cs_o;
  cs_o.attach(cons);
  cons->add_option("--checkpoint", ckpt, "model bundle")->required();

  // ablate
  auto* abl = app.add_subcommand("ablate", "train and evaluate the toggle matrix");
  Overrides ab_o;
  ab_o.attach(abl);
  abl->add_option("--data", data_dirs, "training dataset directories")->required();
  std::vector<std::string> mix_dirs;
  abl->add_option("--mix-data", mix_dirs, "domain-B directories for the mix row");

  // inspect-checkpoint
  auto* insp = app.add_subcommand("inspect-checkpoint", "print a checkpoint manifest");
  insp->add_option("--checkpoint", ckpt, "checkpoint file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (gen->parsed()) {
      RunConfig c = resolve(g, gen_o);
      sim::DatasetOptions opt;
      opt.split = split;
      opt.scenario.duration = c.data.duration;
      const std::size_t n = episodes ? *episodes : c.data.train_episodes;
      std::vector<std::string> domains{g.domain};
      if (c.data.domain_mix && g.domain == "A") domains.push_back("B");
      for (const auto& d : domains) {
        const fs::path dir = fs::path(g.out) / d / split;
        const auto m = sim::generate_dataset(sim::domain_by_name(d), n, c.data.seed, dir, opt);
        std::printf("%s: %zu episodes (%zu aborted, %zu with expert collisions, %zu off-corridor) -> %s\n",
                    d.c_str(), m.files.size(), m.aborted_episodes, m.expert_collision_episodes,
                    m.expert_off_corridor_episodes, dir.c_str());
      }
      return kOk;
    }
    if (tcodec->parsed()) {
      RunConfig c = resolve(g, tc_o);
      const auto eps = load_episodes(data_dirs);
      if (eps.empty()) throw ContractError("no episodes in the given datasets");
      auto r = codec::train_codec(all_frames(eps), c.codec_train, c.codec);
      const fs::path out = fs::path(g.out) / "codec.dvck";
      save_checkpoint(out, codec_checkpoint(r.params, c));
      std::string csv = "epoch,loss\n";
      for (std::size_t e = 0; e < r.epoch_loss.size(); ++e) csv += std::to_string(e) + "," + std::to_string(r.epoch_loss[e]) + "\n";
      write_text(fs::path(g.out) / "codec_loss.csv", csv);
      std::printf("codec: %zu frames, final loss %.6f -> %s\n", all_frames(eps).size(), r.params.final_loss, out.c_str());
      return kOk;
    }
    if (train->parsed()) {
      RunConfig c = resolve(g, tr_o);
      const auto eps = load_episodes(data_dirs);
      if (eps.empty()) throw ContractError("no episodes in the given datasets");
      std::optional<codec::CodecParams> pre;
      if (!codec_path.empty()) pre = codec_from_checkpoint(load_checkpoint(codec_path));
      const fs::path out(g.out);
      codec::CodecParams codec_used;
      TrainHooks hooks;
      hooks.on_step = [&](const TrainProgress& p) {
        if (p.step % 50 == 0) std::printf("step %zu loss %.5f lr %.3g\n", p.step, p.loss, p.lr), std::fflush(stdout);
      };
      std::vector<double> curve;
      Bundle b;
      {
        const codec::CodecParams cp = pre ? *pre : codec::train_codec(all_frames(eps), c.codec_train, c.codec).params;
        hooks.on_checkpoint = [&](std::size_t step, const model::VaModel<float>& m) {
          if (step == c.train.steps) return;
          Bundle tmp;
          tmp.config = c;
          tmp.codec = cp;
          tmp.model = std::make_unique<model::VaModel<float>>(m.config(), m.params(), m.normalizer());
          tmp.step = step;
          char name[48];
          std::snprintf(name, sizeof(name), "checkpoint_%06zu.dvck", step);
          save_checkpoint(out / name, bundle_checkpoint(tmp));
        };
        b = train_bundle(c, eps, hooks, &curve, &cp);
      }
      save_checkpoint(out / "model.dvck", bundle_checkpoint(b));
      std::string csv = "step,loss\n";
      for (std::size_t i = 0; i < curve.size(); ++i) {
        char line[64];
        std::snprintf(line, sizeof(line), "%zu,%.9g\n", i, curve[i]);
        csv += line;
      }
      write_text(out / "loss.csv", csv);
      write_json(out / "run_config.json", to_json(c));
      std::printf("trained %zu steps, final loss %.5f, parameter hash %s -> %s\n", c.train.steps,
                  curve.empty() ? 0.0 : curve.back(), parameter_hash(b).c_str(), (out / "model.dvck").c_str());
      return kOk;
    }
    if (evc->parsed()) {
      std::optional<Bundle> b;
      RunConfig c;
      if (expert) {
        c = resolve(g, ec_o);
      } else {
        if (ckpt.empty()) throw CLI::RequiredError("--checkpoint (or --expert)");
        b = load_bundle(ckpt);
        c = b->config;
        ec_o.apply(c);
        if (g.seed) c.sampler.seed = *g.seed;
        if (!(c.model == b->config.model)) throw ParameterError("eval-closed: model overrides do not apply to a trained checkpoint");
      }
      const auto seeds = eval_scenario_seeds(g.domain, c.data.eval_scenarios);
      const auto planner = [&]() {
        return expert ? rollout::expert_planner() : rollout::model_planner(*b->model, b->codec, c.sampler);
      };
      const auto r = evaluate_closed_loop(g.domain, seeds, planner, loop_options(c, false));
      const ReportHeader h = header_for("eval-closed", g.domain, c, expert ? "expert" : parameter_hash(*b));
      write_json(fs::path(g.out) / ("closed_loop_" + g.domain + ".json"), closed_loop_json(r, h));
      write_text(fs::path(g.out) / ("closed_loop_" + g.domain + ".csv"), closed_loop_csv(r, h));
      print_fleet(r);
      std::printf("parameter hash %s\n", h.parameter_hash.c_str());
      if (gate && r.fleet.pdms < *gate) {
        std::printf("gate failed: PDMS %.4f < %.4f\n", r.fleet.pdms, *gate);
        return kGate;
      }
      return kOk;
    }
    if (evo->parsed()) {
      Bundle b = load_bundle(ckpt);
      RunConfig c = b.config;
      eo_o.apply(c);
      if (g.seed) c.sampler.seed = *g.seed;
      std::vector<std::pair<std::string, metrics::OpenLoopReport>> rows;
      for (const std::string d : {"A", "B"}) {
        const auto held = simulate_episodes(d, held_episodes, derive_seed(c.data.seed, "held-out"), c.data.duration);
        rows.emplace_back(d, evaluate_open_loop(*b.model, b.codec, held, c.sampler, c.data.duration, stride, inject_gt));
        const auto& r = rows.back().second;
        std::printf("%s: L2 %.3f / %.3f / %.3f  avg %.3f   CR %.3f / %.3f / %.3f  avg %.3f  (%zu windows)\n", d.c_str(),
                    r.l2[0], r.l2[1], r.l2[2], r.l2_avg, r.collision_rate[0], r.collision_rate[1], r.collision_rate[2],
                    r.collision_avg, r.samples);
      }
      const ReportHeader h = header_for("eval-open", "A,B", c, parameter_hash(b));
      write_json(fs::path(g.out) / "open_loop.json", open_loop_json(rows, h));
      write_text(fs::path(g.out) / "open_loop.csv", open_loop_csv(rows, h));
      return kOk;
    }
    if (cons->parsed()) {
      Bundle b = load_bundle(ckpt);
      RunConfig c = b.config;
      cs_o.apply(c);
      if (b.config.model.action_only) throw ContractError("consistency needs a model that predicts video");
      const auto seeds = eval_scenario_seeds(g.domain, c.data.eval_scenarios);
      const auto r = evaluate_closed_loop(g.domain, seeds, [&] { return rollout::model_planner(*b.model, b.codec, c.sampler); },
                                          loop_options(c, true));
      const auto rep = evaluate_consistency(r.logs, b.codec);
      const ReportHeader h = header_for("consistency", g.domain, c, parameter_hash(b));
      write_json(fs::path(g.out) / ("consistency_" + g.domain + ".json"), consistency_json(rep, h));
      write_text(fs::path(g.out) / ("consistency_" + g.domain + ".csv"), consistency_csv(rep, h));
      std::printf("GT traj. vs GT-video recon. %.3f m   Pred. traj. vs Pred.-video recon. %.3f m (ratio %.3f)\n",
                  rep.gt_l2, rep.pred_l2, rep.pred_ratio);
      return kOk;
    }
    if (abl->parsed()) {
      RunConfig base = resolve(g, ab_o);
      const auto eps = load_episodes(data_dirs);
      const auto mix = load_episodes(mix_dirs);
      if (eps.empty()) throw ContractError("no episodes in the given datasets");
      const codec::CodecParams cp = codec::train_codec(all_frames(eps), base.codec_train, base.codec).params;
      const auto seeds = eval_scenario_seeds("A", base.data.eval_scenarios);
      const auto held = simulate_episodes("A", 20, derive_seed(base.data.seed, "held-out"), base.data.duration);
      std::vector<AblationRow> rows;
      auto run = [&](const std::string& label, RunConfig c, const std::vector<sim::Episode>& train_eps, Json toggles,
                     const Bundle* reuse) {
        c.sync_continuation();
        Bundle own;
        const Bundle* b = reuse;
        if (!b) {
          own = train_bundle(c, train_eps, {}, nullptr, &cp);
          b = &own;
        }
        const auto r = evaluate_closed_loop("A", seeds, [&] { return rollout::model_planner(*b->model, b->codec, c.sampler); },
                                            loop_options(c, false));
        const auto ol = evaluate_open_loop(*b->model, b->codec, held, c.sampler, c.data.duration);
        AblationRow row;
        row.label = label;
        row.toggles = std::move(toggles);
        row.parameter_hash = parameter_hash(*b);
        row.fleet = r.fleet;
        row.open_loop_l2 = ol.l2_avg;
        rows.push_back(std::move(row));
        std::printf("%-22s PDMS %.4f  L2 %.3f\n", label.c_str(), r.fleet.pdms, ol.l2_avg);
        std::fflush(stdout);
        return own;
      };
      Bundle joint = run("joint", base, eps, {{"video_loss", true}}, nullptr);
      RunConfig c = base;
      c.model.action_only = true;
      run("action_only", c, eps, {{"video_loss", false}}, nullptr);
      if (!mix.empty()) {
        std::vector<sim::Episode> both = eps;
        both.insert(both.end(), mix.begin(), mix.end());
        c = base;
        c.data.domain_mix = true;
        run("domain_mix", c, both, {{"domain_mix", true}}, nullptr);
      }
      c = base;
      c.model.m = 1;
      run("single_frame", c, eps, {{"continuation", "single_frame"}}, nullptr);
      c = base;
      c.model.mask_mode = model::MaskMode::causal;
      run("causal_mask", c, eps, {{"mask_mode", "causal"}}, nullptr);
      for (std::size_t n : {4u, 12u}) {
        c = base;
        c.model.n_pred = n;
        run("future_frames_" + std::to_string(n), c, eps, {{"future_frames", n}}, nullptr);
      }
      for (std::size_t s : {1u, 2u, 3u, 8u}) {
        c = base;
        c.sampler.steps = s;
        run("steps_" + std::to_string(s), c, eps, {{"sampler_steps", s}}, &joint);
      }
      const ReportHeader h = header_for("ablate", "A", base, parameter_hash(joint));
      write_json(fs::path(g.out) / "ablation.json", ablation_json(rows, h));
      write_text(fs::path(g.out) / "ablation.csv", ablation_csv(rows, h));
      return kOk;
    }
    if (insp->parsed()) {
      const Checkpoint c = load_checkpoint(ckpt);
      Json j{{"kind", c.kind}, {"step", c.step}, {"rng", c.rng}, {"meta", c.meta}, {"config", c.config}};
      Json t = Json::array();
      std::size_t elems = 0;
      for (const auto& r : c.tensors) {
        t.push_back({{"name", r.name}, {"shape", r.shape}});
        elems += r.data.size();
      }
      j["tensors"] = t;
      j["elements"] = elems;
      if (c.kind == "bundle") j["parameter_hash"] = parameter_hash(bundle_from_checkpoint(c));
      std::cout << j.dump(2) << "\n";
      return kOk;
    }
  } catch (const CLI::Error& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kUsage;
  } catch (const ParameterError& e) {
    std::fprintf(stderr, "invalid parameter: %s\n", e.what());
    return kUsage;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kData;
  }
  return kUsage;
}
