// Copyright 2026 The vawm Authors
// SPDX-License-Identifier: Apache-2.0

#include "vawm/app/reports.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "vawm/error.hpp"

namespace vawm::app {

namespace {

std::string num(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string header_lines(const ReportHeader& h) {
  std::ostringstream s;
  s << "# command: " << h.command << "\n";
  s << "# domain: " << h.domain << "\n";
  s << "# config_hash: " << h.config_hash << "\n";
  s << "# parameter_hash: " << h.parameter_hash << "\n";
  s << "# metric_constants: " << to_json(h.constants).dump() << "\n";
  if (!h.extra.empty()) s << "# extra: " << h.extra.dump() << "\n";
  return s.str();
}

Json scores_json(const metrics::SubScores& s) {
  return Json{{"NC", s.nc}, {"DAC", s.dac}, {"TTC", s.ttc}, {"Comf", s.comfort}, {"EP", s.ep}};
}

}  // namespace

Json ReportHeader::to_json() const {
  return Json{{"command", command},
              {"domain", domain},
              {"config_hash", config_hash},
              {"parameter_hash", parameter_hash},
              {"metric_constants", app::to_json(constants)},
              {"extra", extra}};
}

Json closed_loop_json(const ClosedLoopResult& r, const ReportHeader& h) {
  Json j{{"header", h.to_json()}};
  Json rows = Json::array();
  for (const auto& s : r.scenarios) {
    Json row = scores_json(s.scores);
    row["scenario"] = s.seed;
    row["PDMS"] = s.pdms;
    row["partial"] = s.partial;
    if (!s.error.empty()) row["error"] = s.error;
    rows.push_back(row);
  }
  j["scenarios"] = rows;
  Json fleet = scores_json(r.fleet.mean);
  fleet["PDMS"] = r.fleet.pdms;
  fleet["count"] = r.fleet.scenarios;
  fleet["skipped"] = r.skipped;
  j["fleet"] = fleet;
  return j;
}

std::string closed_loop_csv(const ClosedLoopResult& r, const ReportHeader& h) {
  std::ostringstream s;
  s << header_lines(h);
  s << "scenario,NC,DAC,TTC,Comf.,EP,PDMS\n";
  auto line = [&](const std::string& name, const metrics::SubScores& x, double p) {
    s << name << ',' << num(x.nc) << ',' << num(x.dac) << ',' << num(x.ttc) << ',' << num(x.comfort) << ','
      << num(x.ep) << ',' << num(p) << "\n";
  };
  for (const auto& sc : r.scenarios) line(std::to_string(sc.seed), sc.scores, sc.pdms);
  line("fleet", r.fleet.mean, r.fleet.pdms);
  return s.str();
}

Json open_loop_json(const std::vector<std::pair<std::string, metrics::OpenLoopReport>>& rows, const ReportHeader& h) {
  Json j{{"header", h.to_json()}};
  Json out = Json::array();
  for (const auto& [label, r] : rows) {
    out.push_back({{"row", label},
                   {"L2_1s", r.l2[0]}, {"L2_2s", r.l2[1]}, {"L2_3s", r.l2[2]}, {"L2_avg", r.l2_avg},
                   {"CR_1s", r.collision_rate[0]}, {"CR_2s", r.collision_rate[1]}, {"CR_3s", r.collision_rate[2]},
                   {"CR_avg", r.collision_avg}, {"samples", r.samples}});
  }
  j["rows"] = out;
  return j;
}

std::string open_loop_csv(const std::vector<std::pair<std::string, metrics::OpenLoopReport>>& rows,
                          const ReportHeader& h) {
  std::ostringstream s;
  s << header_lines(h);
  s << "row,L2@1s,L2@2s,L2@3s,L2 Avg,CR@1s,CR@2s,CR@3s,CR Avg\n";
  for (const auto& [label, r] : rows) {
    s << label << ',' << num(r.l2[0], 3) << ',' << num(r.l2[1], 3) << ',' << num(r.l2[2], 3) << ',' << num(r.l2_avg, 3)
      << ',' << num(r.collision_rate[0], 3) << ',' << num(r.collision_rate[1], 3) << ',' << num(r.collision_rate[2], 3)
      << ',' << num(r.collision_avg, 3) << "\n";
  }
  return s.str();
}

Json consistency_json(const metrics::ConsistencyReport& r, const ReportHeader& h) {
  Json j{{"header", h.to_json()}};
  Json rows = Json::array();
  for (const auto& s : r.scenarios) {
    rows.push_back({{"scenario", s.scenario_seed}, {"gt_cycles", s.gt_cycles}, {"pred_cycles", s.pred_cycles},
                    {"gt_l2", s.gt_l2}, {"pred_l2", s.pred_l2}, {"pred_path", s.pred_path},
                    {"pred_ratio", s.pred_ratio}});
  }
  j["scenarios"] = rows;
  j["mean"] = {{"gt_l2", r.gt_l2}, {"pred_l2", r.pred_l2}, {"pred_ratio", r.pred_ratio},
               {"skipped_cycles", r.skipped_cycles}};
  return j;
}

std::string consistency_csv(const metrics::ConsistencyReport& r, const ReportHeader& h) {
  std::ostringstream s;
  s << header_lines(h);
  s << "scenario,GT traj. vs. GT-video recon.,Pred. traj. vs. Pred.-video recon.,pred path (m),pred ratio\n";
  for (const auto& x : r.scenarios) {
    s << x.scenario_seed << ',' << num(x.gt_l2, 3) << ',' << num(x.pred_l2, 3) << ',' << num(x.pred_path, 3) << ','
      << num(x.pred_ratio, 3) << "\n";
  }
  s << "mean," << num(r.gt_l2, 3) << ',' << num(r.pred_l2, 3) << ",," << num(r.pred_ratio, 3) << "\n";
  return s.str();
}

std::string ablation_csv(const std::vector<AblationRow>& rows, const ReportHeader& h) {
  std::ostringstream s;
  s << header_lines(h);
  s << "row,toggles,parameter_hash,NC,DAC,TTC,Comf.,EP,PDMS,L2 Avg\n";
  for (const auto& r : rows) {
    std::string t = r.toggles.dump();
    for (auto& ch : t)
      if (ch == ',') ch = ';';
    s << r.label << ',' << t << ',' << r.parameter_hash << ',' << num(r.fleet.mean.nc) << ','
      << num(r.fleet.mean.dac) << ',' << num(r.fleet.mean.ttc) << ',' << num(r.fleet.mean.comfort) << ','
      << num(r.fleet.mean.ep) << ',' << num(r.fleet.pdms) << ',' << num(r.open_loop_l2, 3) << "\n";
  }
  return s.str();
}

Json ablation_json(const std::vector<AblationRow>& rows, const ReportHeader& h) {
  Json j{{"header", h.to_json()}};
  Json out = Json::array();
  for (const auto& r : rows) {
    Json f = scores_json(r.fleet.mean);
    f["PDMS"] = r.fleet.pdms;
    out.push_back({{"row", r.label}, {"toggles", r.toggles}, {"parameter_hash", r.parameter_hash}, {"fleet", f},
                   {"L2_avg", r.open_loop_l2}});
  }
  j["rows"] = out;
  return j;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
  if (!f) throw IoError("short write on " + path.string());
}

void write_json(const std::filesystem::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

}  // namespace vawm::app
