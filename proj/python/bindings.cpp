// Copyright 2026 The vawm Authors
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "vawm/app/evaluation.hpp"
#include "vawm/app/training.hpp"
#include "vawm/error.hpp"
#include "vawm/flow/flow.hpp"
#include "vawm/metrics/alignment.hpp"
#include "vawm/metrics/odometry.hpp"

namespace py = pybind11;
using namespace vawm;

namespace {

using F64 = py::array_t<double, py::array::c_style | py::array::forcecast>;
using F32 = py::array_t<float, py::array::c_style | py::array::forcecast>;

py::object to_py(const app::Json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

app::Json from_py(const py::object& o) {
  return app::Json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

std::vector<sim::Vec2> points(const F64& a) {
  if (a.ndim() != 2 || a.shape(1) != 2) throw DimensionError("expected an [n x 2] array");
  std::vector<sim::Vec2> out(static_cast<std::size_t>(a.shape(0)));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = {a.at(i, 0), a.at(i, 1)};
  return out;
}

F64 points_array(const std::vector<sim::Vec2>& p) {
  F64 out({static_cast<py::ssize_t>(p.size()), py::ssize_t{2}});
  auto m = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < p.size(); ++i) m(i, 0) = p[i].x, m(i, 1) = p[i].y;
  return out;
}

sim::Frame frame_from(const F32& a) {
  if (a.ndim() != 2) throw DimensionError("expected a 2-D frame");
  sim::Frame f;
  f.height = static_cast<std::size_t>(a.shape(0));
  f.width = static_cast<std::size_t>(a.shape(1));
  f.cells.assign(a.data(), a.data() + a.size());
  return f;
}

py::dict episode_dict(const sim::Episode& e) {
  const std::size_t T = e.length();
  const std::size_t H = T ? e.frames[0].height : 0, W = T ? e.frames[0].width : 0;
  const std::size_t K = T ? e.expert_actions[0].size() : 0;
  py::array_t<float> frames({T, H, W});
  py::array_t<double> states({T, std::size_t{5}});
  py::array_t<double> actions({T, K, std::size_t{3}});
  auto fm = frames.mutable_unchecked<3>();
  auto sm = states.mutable_unchecked<2>();
  auto am = actions.mutable_unchecked<3>();
  std::vector<int> commands;
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t r = 0; r < H; ++r)
      for (std::size_t c = 0; c < W; ++c) fm(t, r, c) = e.frames[t].at(r, c);
    const auto& s = e.states[t];
    sm(t, 0) = s.x, sm(t, 1) = s.y, sm(t, 2) = s.yaw, sm(t, 3) = s.vx, sm(t, 4) = s.vy;
    for (std::size_t k = 0; k < K; ++k) {
      const auto& a = e.expert_actions[t][k];
      am(t, k, 0) = a.x, am(t, k, 1) = a.y, am(t, k, 2) = a.yaw;
    }
    commands.push_back(static_cast<int>(e.commands[t]));
  }
  py::dict d;
  d["domain"] = e.domain;
  d["seed"] = e.scenario_seed;
  d["frames"] = frames;
  d["states"] = states;
  d["expert_actions"] = actions;
  d["commands"] = commands;
  return d;
}

py::dict fleet_dict(const app::ClosedLoopResult& r) {
  py::dict d;
  d["domain"] = r.domain;
  d["pdms"] = r.fleet.pdms;
  d["nc"] = r.fleet.mean.nc;
  d["dac"] = r.fleet.mean.dac;
  d["ttc"] = r.fleet.mean.ttc;
  d["comfort"] = r.fleet.mean.comfort;
  d["ep"] = r.fleet.mean.ep;
  d["scenarios"] = r.fleet.scenarios;
  d["skipped"] = r.skipped;
  std::vector<double> per;
  for (const auto& s : r.scenarios) per.push_back(s.pdms);
  d["per_scenario"] = per;
  return d;
}

app::ClosedLoopOptions loop_options(const app::RunConfig& c) {
  app::ClosedLoopOptions o;
  o.rollout = c.rollout;
  o.constants = c.metrics;
  o.duration = c.data.duration;
  o.workers = app::worker_count();
  return o;
}

class PyModel {
 public:
  explicit PyModel(const std::string& path) : b_(app::load_bundle(path)) {}
  explicit PyModel(app::Bundle b) : b_(std::move(b)) {}

  std::string parameter_hash() const { return app::parameter_hash(b_); }
  py::object config() const { return to_py(app::to_json(b_.config)); }

  void save(const std::string& path) const { app::save_checkpoint(path, app::bundle_checkpoint(b_)); }

  py::dict eval_closed(const std::string& domain, std::size_t n, std::size_t steps, std::uint64_t seed) {
    app::RunConfig c = b_.config;
    c.data.eval_scenarios = n;
    const flow::SamplerConfig sc{steps, seed};
    py::gil_scoped_release release;
    const auto r = app::evaluate_closed_loop(domain, app::eval_scenario_seeds(domain, n),
                                             [&] { return rollout::model_planner(*b_.model, b_.codec, sc); },
                                             loop_options(c));
    py::gil_scoped_acquire acquire;
    return fleet_dict(r);
  }

  py::dict eval_open(const std::string& domain, std::size_t episodes, std::uint64_t seed, bool inject_gt) {
    const auto held = app::simulate_episodes(domain, episodes, seed, b_.config.data.duration);
    const auto r = app::evaluate_open_loop(*b_.model, b_.codec, held, b_.config.sampler, b_.config.data.duration, 4,
                                           inject_gt);
    py::dict d;
    d["l2"] = std::vector<double>(r.l2.begin(), r.l2.end());
    d["collision_rate"] = std::vector<double>(r.collision_rate.begin(), r.collision_rate.end());
    d["l2_avg"] = r.l2_avg;
    d["collision_avg"] = r.collision_avg;
    d["samples"] = r.samples;
    return d;
  }

  py::array_t<float> reconstruct(const F32& frame) const {
    const auto f = codec::decode_frame(codec::encode_frame(frame_from(frame), b_.codec), b_.codec);
    py::array_t<float> out({f.height, f.width});
    std::copy(f.cells.begin(), f.cells.end(), out.mutable_data());
    return out;
  }

 private:
  app::Bundle b_;
};

}  // namespace

PYBIND11_MODULE(_vawm, m) {
  m.doc() = "Joint video-action world model: simulator, training, sampling and metrics";

  py::register_exception<Error>(m, "VawmError", PyExc_RuntimeError);
  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);

  m.def("default_config", [] { return to_py(app::to_json(app::default_run_config())); });
  m.def("config_hash", [](const py::object& cfg) { return app::config_hash(app::run_config_from_json(from_py(cfg))); });

  m.def(
      "simulate_episode",
      [](const std::string& domain, std::uint64_t seed, double duration) {
        sim::ScenarioOptions opt;
        opt.duration = duration;
        return episode_dict(sim::simulate_expert_episode(sim::sample_scenario(sim::domain_by_name(domain), seed, opt)));
      },
      py::arg("domain") = "A", py::arg("seed") = 0, py::arg("duration") = 12.0);

  m.def(
      "pdms",
      [](double nc, double dac, double ttc, double comfort, double ep) {
        return metrics::pdms({nc, dac, ttc, comfort, ep});
      },
      py::arg("nc"), py::arg("dac"), py::arg("ttc"), py::arg("comfort"), py::arg("ep"));

  m.def(
      "interpolate",
      [](const F64& y0, const F64& eps, double s) {
        if (y0.size() != eps.size()) throw DimensionError("interpolate: shape mismatch");
        diffcore::NdArray<double> a({static_cast<std::size_t>(y0.size())}, std::vector<double>(y0.data(), y0.data() + y0.size()));
        diffcore::NdArray<double> b({static_cast<std::size_t>(eps.size())}, std::vector<double>(eps.data(), eps.data() + eps.size()));
        const auto r = flow::interpolate(a, b, s);
        return py::make_tuple(py::array_t<double>(y0.size(), r.y_s.ptr()), py::array_t<double>(y0.size(), r.velocity.ptr()));
      },
      py::arg("y0"), py::arg("eps"), py::arg("s"));

  m.def(
      "umeyama_align",
      [](const F64& source, const F64& target) {
        const auto a = metrics::umeyama_align(points(source), points(target));
        py::dict d;
        d["scale"] = a.transform.scale;
        d["rotation"] = a.transform.rotation;
        d["translation"] = py::make_tuple(a.transform.translation.x, a.transform.translation.y);
        d["aligned"] = points_array(a.aligned);
        d["rms"] = a.rms;
        return d;
      },
      py::arg("source"), py::arg("target"));

  m.def("avg_l2", [](const F64& a, const F64& b) { return metrics::avg_l2(points(a), points(b)); });

  m.def("register_pair", [](const F32& prev, const F32& next) {
    const auto r = metrics::register_pair(frame_from(prev), frame_from(next));
    return py::make_tuple(r.dx, r.dy, r.dyaw);
  });

  m.def(
      "eval_expert",
      [](const std::string& domain, std::size_t n, double duration) {
        app::RunConfig c = app::default_run_config();
        c.data.duration = duration;
        py::gil_scoped_release release;
        const auto r = app::evaluate_closed_loop(domain, app::eval_scenario_seeds(domain, n),
                                                 [] { return rollout::expert_planner(); }, loop_options(c));
        py::gil_scoped_acquire acquire;
        return fleet_dict(r);
      },
      py::arg("domain") = "A", py::arg("n") = 50, py::arg("duration") = 12.0);

  py::class_<PyModel>(m, "Model")
      .def(py::init<const std::string&>(), py::arg("path"))
      .def_property_readonly("parameter_hash", &PyModel::parameter_hash)
      .def_property_readonly("config", &PyModel::config)
      .def("save", &PyModel::save, py::arg("path"))
      .def("eval_closed", &PyModel::eval_closed, py::arg("domain") = "A", py::arg("n") = 50, py::arg("steps") = 2,
           py::arg("seed") = 0)
      .def("eval_open", &PyModel::eval_open, py::arg("domain") = "A", py::arg("episodes") = 20, py::arg("seed") = 999,
           py::arg("inject_gt") = false)
      .def("reconstruct", &PyModel::reconstruct, py::arg("frame"));

  m.def(
      "train",
      [](const py::object& cfg, std::size_t episodes) {
        const app::RunConfig c = app::run_config_from_json(from_py(cfg));
        c.validate();
        std::vector<double> curve;
        app::Bundle b;
        {
          py::gil_scoped_release release;
          const auto eps = app::simulate_episodes(c.data.train_domain, episodes, c.data.seed, c.data.duration);
          b = app::train_bundle(c, eps, {}, &curve);
        }
        return py::make_tuple(PyModel(std::move(b)), curve);
      },
      py::arg("config"), py::arg("episodes"));
}
