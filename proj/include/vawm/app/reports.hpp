// Copyright 2026 The vawm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "vawm/app/evaluation.hpp"

namespace vawm::app {

/// Provenance embedded in every report.
struct ReportHeader {
  std::string command;
  std::string domain;
  std::string config_hash;
  std::string parameter_hash;
  metrics::MetricConstants constants;
  Json extra = Json::object();

  Json to_json() const;
};

Json closed_loop_json(const ClosedLoopResult& r, const ReportHeader& h);
/// Columns: scenario, NC, DAC, TTC, Comf., EP, PDMS, plus a fleet row.
std::string closed_loop_csv(const ClosedLoopResult& r, const ReportHeader& h);

Json open_loop_json(const std::vector<std::pair<std::string, metrics::OpenLoopReport>>& rows, const ReportHeader& h);
/// Columns: row, L2 (m) at 1s/2s/3s/Avg, CR at 1s/2s/3s/Avg.
std::string open_loop_csv(const std::vector<std::pair<std::string, metrics::OpenLoopReport>>& rows,
                          const ReportHeader& h);

Json consistency_json(const metrics::ConsistencyReport& r, const ReportHeader& h);
/// Columns: scenario, GT traj. vs GT-video recon., Pred. traj. vs Pred.-video recon., pred path, ratio.
std::string consistency_csv(const metrics::ConsistencyReport& r, const ReportHeader& h);

struct AblationRow {
  std::string label;
  Json toggles;
  std::string parameter_hash;
  metrics::FleetScores fleet;
  double open_loop_l2 = 0.0;
};

std::string ablation_csv(const std::vector<AblationRow>& rows, const ReportHeader& h);
Json ablation_json(const std::vector<AblationRow>& rows, const ReportHeader& h);

void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const Json& j);

}  // namespace vawm::app
