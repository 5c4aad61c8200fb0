// Copyright (c) 2026 The llmconf Authors.
// SPDX-License-Identifier: Apache-2.0

#include "llmconf/report.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "json_util.hpp"

namespace llmconf {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// null reads back as +inf (speed at tpot == 0, decode rate at osl == 1).
double num_or_inf(const json& j, const char* key, std::string_view where) {
  const json& v = detail::require_field(j, key, where);
  if (v.is_null()) return kInf;
  return detail::get_as<double>(j, key, where);
}

std::string fmt(double v) {
  if (!std::isfinite(v)) return "inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string short_config(const json& cfg) {
  std::ostringstream os;
  os << "tp" << cfg.at("tp").get<int>() << " pp" << cfg.at("pp").get<int>() << " ep"
     << cfg.at("ep").get<int>() << " dp" << cfg.at("dp").get<int>() << " batch"
     << cfg.at("batch").get<int>();
  return os.str();
}

PerfEstimate estimate_from_json(const json& j) {
  constexpr std::string_view where = "point.estimate";
  detail::reject_unknown_keys(
      j, {"mode", "ttft_ms", "tpot_ms", "speed", "throughput_per_gpu", "batch", "gpus", "breakdown"},
      where);
  PerfEstimate e;
  e.mode = parse_mode(detail::get_as<std::string>(j, "mode", where));
  e.ttft = detail::get_as<double>(j, "ttft_ms", where);
  e.tpot = detail::get_as<double>(j, "tpot_ms", where);
  e.speed = num_or_inf(j, "speed", where);
  e.throughput_per_gpu = detail::get_as<double>(j, "throughput_per_gpu", where);
  e.batch = detail::get_as<std::int64_t>(j, "batch", where);
  e.gpus = detail::get_as<int>(j, "gpus", where);
  if (j.contains("breakdown")) {
    const json& b = j.at("breakdown");
    if (!b.is_array()) throw ParseError("point.estimate.breakdown: expected an array");
    for (const json& row : b) {
      if (!row.is_array() || row.size() != 2 || !row[0].is_string() || !row[1].is_number()) {
        throw ParseError("point.estimate.breakdown: expected [name, value] pairs");
      }
      e.breakdown.emplace_back(row[0].get<std::string>(), row[1].get<double>());
    }
  }
  return e;
}

}  // namespace

json to_json(const PerfEstimate& e) {
  json breakdown = json::array();
  for (const auto& [name, v] : e.breakdown) breakdown.push_back(json::array({name, num(v)}));
  return json{{"mode", std::string(to_string(e.mode))},
              {"ttft_ms", num(e.ttft)},
              {"tpot_ms", num(e.tpot)},
              {"speed", num(e.speed)},
              {"throughput_per_gpu", num(e.throughput_per_gpu)},
              {"batch", e.batch},
              {"gpus", e.gpus},
              {"breakdown", std::move(breakdown)}};
}

json to_json(const DisaggPlan& p) {
  return json{{"prefill", to_json(p.prefill_cfg)},
              {"decode", to_json(p.decode_cfg)},
              {"x", p.x},
              {"y", p.y},
              {"r_pre", num(p.r_pre)},
              {"r_dec", num(p.r_dec)},
              {"r_sys", num(p.r_sys)},
              {"requests_per_gpu", num(p.throughput_per_gpu)},
              {"ttft_ms", num(p.ttft)},
              {"tpot_ms", num(p.tpot)},
              {"gpus", p.gpus},
              {"prefill_index", p.prefill_index},
              {"decode_index", p.decode_index}};
}

json to_json(const ParetoPoint& p) {
  json j{{"mode", std::string(to_string(p.mode()))},
         {"sla_ok", p.sla_ok},
         {"estimate", to_json(p.estimate)}};
  if (p.config) j["config"] = to_json(*p.config);
  if (p.plan) j["plan"] = to_json(*p.plan);
  return j;
}

json to_json(const Skip& s) {
  return json{{"mode", std::string(to_string(s.mode))}, {"config", s.config}, {"reason", s.reason}};
}

json to_json(const Timing& t) {
  return json{{"total_ms", t.total_ms},
              {"per_candidate_median_ms", t.per_candidate_median_ms},
              {"candidates", t.candidates}};
}

DisaggPlan disagg_plan_from_json(const json& j) {
  constexpr std::string_view where = "point.plan";
  detail::reject_unknown_keys(j,
                              {"prefill", "decode", "x", "y", "r_pre", "r_dec", "r_sys",
                               "requests_per_gpu", "ttft_ms", "tpot_ms", "gpus", "prefill_index",
                               "decode_index"},
                              where);
  DisaggPlan p;
  p.prefill_cfg = parallel_config_from_json(detail::require_field(j, "prefill", where));
  p.decode_cfg = parallel_config_from_json(detail::require_field(j, "decode", where));
  p.x = detail::get_as<int>(j, "x", where);
  p.y = detail::get_as<int>(j, "y", where);
  p.r_pre = num_or_inf(j, "r_pre", where);
  p.r_dec = num_or_inf(j, "r_dec", where);
  p.r_sys = num_or_inf(j, "r_sys", where);
  p.throughput_per_gpu = num_or_inf(j, "requests_per_gpu", where);
  p.ttft = detail::get_as<double>(j, "ttft_ms", where);
  p.tpot = detail::get_as<double>(j, "tpot_ms", where);
  p.gpus = detail::get_as<int>(j, "gpus", where);
  p.prefill_index = detail::get_or<std::size_t>(j, "prefill_index", 0, where);
  p.decode_index = detail::get_or<std::size_t>(j, "decode_index", 0, where);
  return p;
}

ParetoPoint point_from_json(const json& j) {
  constexpr std::string_view where = "point";
  detail::reject_unknown_keys(j, {"mode", "sla_ok", "estimate", "config", "plan"}, where);
  ParetoPoint p;
  const Mode mode = parse_mode(detail::get_as<std::string>(j, "mode", where));
  p.sla_ok = detail::get_or<bool>(j, "sla_ok", false, where);
  p.estimate = estimate_from_json(detail::require_field(j, "estimate", where));
  if (p.estimate.mode != mode) {
    throw ValidationError("point: mode does not match estimate.mode");
  }
  auto positive = [](const ParallelConfig& c) {
    return c.tp >= 1 && c.pp >= 1 && c.ep >= 1 && c.dp >= 1 && c.batch >= 1;
  };
  if (mode == Mode::kDisaggregated) {
    if (!j.contains("plan") || j.contains("config")) {
      throw ValidationError("point: a disaggregated entry carries 'plan' and no 'config'");
    }
    DisaggPlan plan = disagg_plan_from_json(j.at("plan"));
    if (!positive(plan.prefill_cfg) || !positive(plan.decode_cfg) || plan.x < 1 || plan.y < 1) {
      throw ValidationError("point.plan: worker counts and parallel degrees must be positive");
    }
    const int implied = plan.x * plan.prefill_cfg.gpus() + plan.y * plan.decode_cfg.gpus();
    if (implied != plan.gpus || plan.gpus != p.estimate.gpus) {
      throw ValidationError("point.plan: topology implies " + std::to_string(implied) +
                            " GPUs but the entry reports " + std::to_string(p.estimate.gpus));
    }
    p.plan = std::move(plan);
  } else {
    if (!j.contains("config") || j.contains("plan")) {
      throw ValidationError("point: a " + std::string(to_string(mode)) +
                            " entry carries 'config' and no 'plan'");
    }
    ParallelConfig cfg = parallel_config_from_json(j.at("config"));
    if (!positive(cfg)) throw ValidationError("point.config: parallel degrees must be positive");
    if (cfg.gpus() != p.estimate.gpus) {
      throw ValidationError("point.config: topology implies " + std::to_string(cfg.gpus()) +
                            " GPUs but the entry reports " + std::to_string(p.estimate.gpus));
    }
    if (static_cast<std::int64_t>(cfg.batch) * cfg.dp != p.estimate.batch) {
      throw ValidationError("point.config: batch * dp does not match estimate.batch");
    }
    p.config = std::move(cfg);
  }
  return p;
}

json report_json(const SearchResult& r, const ReportOptions& options) {
  json frontier = json::array();
  for (const auto& p : r.frontier) frontier.push_back(to_json(p));
  json best = json::array();
  for (const auto& p : r.best.ranked) best.push_back(to_json(p));
  json diagnostics = json::array();
  for (const auto& d : r.best.diagnostics) {
    diagnostics.push_back(
        json{{"point", to_json(d.point)}, {"violation", num(d.violation)}, {"reason", d.reason}});
  }
  json skipped = json::array();
  for (const auto& s : r.skipped) skipped.push_back(to_json(s));

  json j{{"workload", to_json(r.workload)},
         {"model", r.model},
         {"hardware", r.hardware},
         {"backend", r.backend},
         {"points_evaluated", r.points.size()},
         {"frontier", std::move(frontier)},
         {"best", std::move(best)},
         {"diagnostics", std::move(diagnostics)},
         {"skipped", std::move(skipped)}};
  if (options.include_timing) j["timing"] = to_json(r.timing);
  return j;
}

std::string dump_report(const json& report) { return report.dump(2) + "\n"; }

std::string frontier_csv(const json& report) {
  if (!report.is_object() || !report.contains("frontier") || !report["frontier"].is_array()) {
    throw ParseError("report: missing 'frontier' array");
  }
  const json* best = nullptr;
  if (report.contains("best") && report["best"].is_array() && !report["best"].empty()) {
    best = &report["best"][0];
  }
  auto value = [](const json& v) {
    return v.is_null() ? std::string("inf") : fmt(v.get<double>());
  };
  std::ostringstream os;
  os << "mode,speed,throughput_per_gpu,ttft_ms,tpot_ms,gpus,batch,sla_ok,best,config\n";
  for (const json& p : report["frontier"]) {
    const json& e = p.at("estimate");
    std::string config;
    if (p.contains("plan")) {
      const json& plan = p["plan"];
      config = std::to_string(plan.at("x").get<int>()) + "xP(" + short_config(plan.at("prefill")) +
               ") " + std::to_string(plan.at("y").get<int>()) + "xD(" +
               short_config(plan.at("decode")) + ")";
    } else {
      config = short_config(p.at("config"));
    }
    os << p.at("mode").get<std::string>() << ',' << value(e.at("speed")) << ','
       << value(e.at("throughput_per_gpu")) << ',' << value(e.at("ttft_ms")) << ','
       << value(e.at("tpot_ms")) << ',' << e.at("gpus").get<int>() << ','
       << e.at("batch").get<std::int64_t>() << ',' << (p.at("sla_ok").get<bool>() ? 1 : 0) << ','
       << (best != nullptr && *best == p ? 1 : 0) << ',' << config << '\n';
  }
  return os.str();
}

}  // namespace llmconf
