// Copyright (c) 2026 The llmconf Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "llmconf/search.hpp"

namespace llmconf {

// Non-finite numbers serialize as null.
nlohmann::json to_json(const PerfEstimate& e);
nlohmann::json to_json(const DisaggPlan& plan);
nlohmann::json to_json(const ParetoPoint& p);
nlohmann::json to_json(const Skip& s);
nlohmann::json to_json(const Timing& t);

// Inverse of to_json(ParetoPoint). Checks that the embedded topology agrees
// with the estimate; throws ValidationError otherwise.
ParetoPoint point_from_json(const nlohmann::json& j);
DisaggPlan disagg_plan_from_json(const nlohmann::json& j);

struct ReportOptions {
  bool include_timing = false;
};

// {workload, model, hardware, backend, points_evaluated, frontier, best,
// diagnostics, skipped[, timing]}
nlohmann::json report_json(const SearchResult& r, const ReportOptions& options = {});

// Pretty-printed with a trailing newline.
std::string dump_report(const nlohmann::json& report);

// Plot-ready frontier rows from a report document. Columns:
// mode,speed,throughput_per_gpu,ttft_ms,tpot_ms,gpus,batch,sla_ok,best,config
std::string frontier_csv(const nlohmann::json& report);

}  // namespace llmconf
