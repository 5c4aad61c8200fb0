// Copyright (c) 2026 The llmconf Authors.
// SPDX-License-Identifier: Apache-2.0

#include "llmconf/workload.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json_util.hpp"
#include "llmconf/error.hpp"

namespace llmconf {

using detail::json;

std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::kStatic:
      return "static";
    case Mode::kAggregated:
      return "aggregated";
    case Mode::kDisaggregated:
      return "disaggregated";
  }
  return "static";
}

Mode parse_mode(std::string_view s) {
  if (s == "static") return Mode::kStatic;
  if (s == "aggregated") return Mode::kAggregated;
  if (s == "disaggregated") return Mode::kDisaggregated;
  throw ParseError("unknown serving mode '" + std::string(s) + "'");
}

double WorkloadSpec::ttft_bound() const {
  return ttft_limit.value_or(std::numeric_limits<double>::infinity());
}

double WorkloadSpec::tpot_bound() const {
  double bound = tpot_limit.value_or(std::numeric_limits<double>::infinity());
  if (min_speed) bound = std::min(bound, 1000.0 / *min_speed);
  return bound;
}

double WorkloadSpec::speed_floor() const {
  const double t = tpot_bound();
  return std::isinf(t) ? 0.0 : 1000.0 / t;
}

bool WorkloadSpec::gpu_count_valid(int gpus) const {
  return std::find(gpus_valid.begin(), gpus_valid.end(), gpus) != gpus_valid.end();
}

bool WorkloadSpec::has_mode(Mode m) const {
  return std::find(modes.begin(), modes.end(), m) != modes.end();
}

namespace {

[[noreturn]] void bad(const std::string& path, const std::string& why) {
  throw ValidationError(path + ": " + why);
}

void check_counts(const std::vector<int>& v, const std::string& path) {
  if (v.empty()) bad(path, "must be non-empty");
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] < 1) bad(path + "[" + std::to_string(i) + "]", "must be >= 1");
    if (i > 0 && v[i] <= v[i - 1]) bad(path, "must be strictly ascending");
  }
}

void check_limit(const std::optional<double>& v, const std::string& path) {
  if (v && !(*v > 0 && std::isfinite(*v))) bad(path, "must be a positive number");
}

std::vector<int> int_list(const json& j, const char* key, const std::string& where) {
  const json& v = detail::require_field(j, key, where);
  if (!v.is_array()) throw ParseError(where + "." + key + ": expected a list of integers");
  std::vector<int> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number_integer()) {
      throw ParseError(where + "." + key + "[" + std::to_string(i) + "]: expected an integer");
    }
    out.push_back(v[i].get<int>());
  }
  return out;
}

std::optional<double> opt_number(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return detail::get_as<double>(j, key, where);
}

}  // namespace

void validate(const WorkloadSpec& w) {
  if (w.isl < 1) bad("workload.isl", "must be >= 1");
  if (w.osl < 1) bad("workload.osl", "must be >= 1");
  if (w.prefix < 0 || w.prefix >= w.isl) bad("workload.prefix", "must satisfy 0 <= prefix < isl");
  check_limit(w.ttft_limit, "workload.ttft_limit");
  check_limit(w.tpot_limit, "workload.tpot_limit");
  check_limit(w.min_speed, "workload.min_speed");
  std::vector<int> gpus = w.gpus_valid;
  std::sort(gpus.begin(), gpus.end());
  check_counts(gpus, "workload.gpus_valid");
  check_counts(w.batch_sweep, "workload.batch_sweep");
  if (w.modes.empty()) bad("workload.modes", "must be non-empty");
  for (std::size_t i = 0; i < w.modes.size(); ++i) {
    for (std::size_t k = 0; k < i; ++k) {
      if (w.modes[k] == w.modes[i]) bad("workload.modes", "duplicate mode");
    }
  }
  try {
    validate(w.moe_load);
  } catch (const ValidationError& e) {
    bad("workload.moe_load", e.what());
  }
  check_counts(w.space.tp, "workload.space.tp");
  check_counts(w.space.pp, "workload.space.pp");
  check_counts(w.space.ep, "workload.space.ep");
  check_counts(w.space.dp, "workload.space.dp");
  if (w.space.ctx_capacity < 1) bad("workload.space.ctx_capacity", "must be >= 1");
  if (!(w.space.kv_mem_fraction > 0 && w.space.kv_mem_fraction <= 1)) {
    bad("workload.space.kv_mem_fraction", "must be in (0, 1]");
  }
  if (w.space.backend.empty()) bad("workload.space.backend", "must be non-empty");
  const ServingConstants& c = w.constants;
  if (c.stride < 1) bad("workload.constants.stride", "must be >= 1");
  if (!(c.f_corr_slope > 0)) bad("workload.constants.f_corr_slope", "must be > 0");
  if (!(c.f_corr_cap >= c.f_corr_base)) bad("workload.constants.f_corr_cap", "must be >= base");
  if (c.mix_warmup_steps < 0) bad("workload.constants.mix_warmup_steps", "must be >= 0");
  if (!(c.alpha_pre > 0) || !(c.alpha_dec > 0) || !(c.beta_ttft > 0)) {
    bad("workload.constants", "alpha_pre, alpha_dec and beta_ttft must be > 0");
  }
  if (c.max_prefill_workers < 1 || c.max_decode_workers < 1) {
    bad("workload.constants", "worker bounds must be >= 1");
  }
}

json to_json(const CandidateSpace& s) {
  return json{{"tp", s.tp},
              {"pp", s.pp},
              {"ep", s.ep},
              {"dp", s.dp},
              {"backend", s.backend},
              {"ctx_capacity", s.ctx_capacity},
              {"chunked_prefill", s.chunked_prefill},
              {"kv_mem_fraction", s.kv_mem_fraction},
              {"cuda_graph", s.cuda_graph}};
}

json to_json(const WorkloadSpec& w) {
  json modes = json::array();
  for (Mode m : w.modes) modes.push_back(std::string(to_string(m)));
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  const ServingConstants& c = w.constants;
  return json{
      {"isl", w.isl},
      {"osl", w.osl},
      {"prefix", w.prefix},
      {"ttft_limit", opt(w.ttft_limit)},
      {"tpot_limit", opt(w.tpot_limit)},
      {"min_speed", opt(w.min_speed)},
      {"gpus_valid", w.gpus_valid},
      {"modes", modes},
      {"batch_sweep", w.batch_sweep},
      {"moe_load",
       {{"alpha", w.moe_load.alpha},
        {"x_min", w.moe_load.x_min},
        {"x_max", w.moe_load.x_max},
        {"seed", w.moe_load.seed}}},
      {"space", to_json(w.space)},
      {"constants",
       {{"stride", c.stride},
        {"f_corr_base", c.f_corr_base},
        {"f_corr_offset", c.f_corr_offset},
        {"f_corr_slope", c.f_corr_slope},
        {"f_corr_cap", c.f_corr_cap},
        {"mix_warmup_steps", c.mix_warmup_steps},
        {"alpha_pre", c.alpha_pre},
        {"alpha_dec", c.alpha_dec},
        {"beta_ttft", c.beta_ttft},
        {"max_prefill_workers", c.max_prefill_workers},
        {"max_decode_workers", c.max_decode_workers}}},
  };
}

CandidateSpace candidate_space_from_json(const json& j, CandidateSpace s) {
  const std::string where = "workload.space";
  detail::reject_unknown_keys(j,
                              {"tp", "pp", "ep", "dp", "backend", "ctx_capacity",
                               "chunked_prefill", "kv_mem_fraction", "cuda_graph"},
                              where);
  if (j.contains("tp")) s.tp = int_list(j, "tp", where);
  if (j.contains("pp")) s.pp = int_list(j, "pp", where);
  if (j.contains("ep")) s.ep = int_list(j, "ep", where);
  if (j.contains("dp")) s.dp = int_list(j, "dp", where);
  s.backend = detail::get_or<std::string>(j, "backend", s.backend, where);
  s.ctx_capacity = detail::get_or<int>(j, "ctx_capacity", s.ctx_capacity, where);
  s.chunked_prefill = detail::get_or<bool>(j, "chunked_prefill", s.chunked_prefill, where);
  s.kv_mem_fraction = detail::get_or<double>(j, "kv_mem_fraction", s.kv_mem_fraction, where);
  s.cuda_graph = detail::get_or<bool>(j, "cuda_graph", s.cuda_graph, where);
  return s;
}

WorkloadSpec workload_from_json(const json& j) {
  const std::string where = "workload";
  detail::reject_unknown_keys(j,
                              {"isl", "osl", "prefix", "ttft_limit", "tpot_limit", "min_speed",
                               "gpus_valid", "modes", "batch_sweep", "moe_load", "space",
                               "constants"},
                              where);
  WorkloadSpec w;
  w.isl = detail::get_as<std::int64_t>(j, "isl", where);
  w.osl = detail::get_as<std::int64_t>(j, "osl", where);
  w.prefix = detail::get_or<std::int64_t>(j, "prefix", 0, where);
  w.ttft_limit = opt_number(j, "ttft_limit", where);
  w.tpot_limit = opt_number(j, "tpot_limit", where);
  w.min_speed = opt_number(j, "min_speed", where);
  if (j.contains("gpus_valid")) w.gpus_valid = int_list(j, "gpus_valid", where);
  if (j.contains("batch_sweep")) w.batch_sweep = int_list(j, "batch_sweep", where);
  if (j.contains("modes")) {
    const json& m = j["modes"];
    if (!m.is_array()) throw ParseError("workload.modes: expected a list");
    w.modes.clear();
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (!m[i].is_string()) {
        throw ParseError("workload.modes[" + std::to_string(i) + "]: expected a string");
      }
      try {
        w.modes.push_back(parse_mode(m[i].get<std::string>()));
      } catch (const ParseError& e) {
        throw ParseError("workload.modes[" + std::to_string(i) + "]: " + e.what());
      }
    }
  }
  if (j.contains("moe_load")) {
    const json& m = j["moe_load"];
    const std::string mw = "workload.moe_load";
    detail::reject_unknown_keys(m, {"alpha", "x_min", "x_max", "seed"}, mw);
    w.moe_load.alpha = detail::get_or<double>(m, "alpha", w.moe_load.alpha, mw);
    w.moe_load.x_min = detail::get_or<double>(m, "x_min", w.moe_load.x_min, mw);
    w.moe_load.x_max = detail::get_or<double>(m, "x_max", w.moe_load.x_max, mw);
    w.moe_load.seed = detail::get_or<std::uint64_t>(m, "seed", w.moe_load.seed, mw);
  }
  if (j.contains("space")) w.space = candidate_space_from_json(j["space"]);
  if (j.contains("constants")) {
    const json& c = j["constants"];
    const std::string cw = "workload.constants";
    detail::reject_unknown_keys(
        c,
        {"stride", "f_corr_base", "f_corr_offset", "f_corr_slope", "f_corr_cap",
         "mix_warmup_steps", "alpha_pre", "alpha_dec", "beta_ttft", "max_prefill_workers",
         "max_decode_workers"},
        cw);
    ServingConstants& k = w.constants;
    k.stride = detail::get_or<int>(c, "stride", k.stride, cw);
    k.f_corr_base = detail::get_or<double>(c, "f_corr_base", k.f_corr_base, cw);
    k.f_corr_offset = detail::get_or<double>(c, "f_corr_offset", k.f_corr_offset, cw);
    k.f_corr_slope = detail::get_or<double>(c, "f_corr_slope", k.f_corr_slope, cw);
    k.f_corr_cap = detail::get_or<double>(c, "f_corr_cap", k.f_corr_cap, cw);
    k.mix_warmup_steps = detail::get_or<int>(c, "mix_warmup_steps", k.mix_warmup_steps, cw);
    k.alpha_pre = detail::get_or<double>(c, "alpha_pre", k.alpha_pre, cw);
    k.alpha_dec = detail::get_or<double>(c, "alpha_dec", k.alpha_dec, cw);
    k.beta_ttft = detail::get_or<double>(c, "beta_ttft", k.beta_ttft, cw);
    k.max_prefill_workers =
        detail::get_or<int>(c, "max_prefill_workers", k.max_prefill_workers, cw);
    k.max_decode_workers = detail::get_or<int>(c, "max_decode_workers", k.max_decode_workers, cw);
  }
  validate(w);
  return w;
}

json load_workload_document(const std::filesystem::path& path) {
  return detail::read_document(path);
}

WorkloadSpec load_workload(const std::filesystem::path& path) {
  try {
    return workload_from_json(load_workload_document(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void apply_override(json& doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ParseError("override '" + std::string(assignment) + "' is not key=value");
  }
  const std::string path(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  json value = text.empty() ? json(nullptr) : detail::yaml_to_json(text, "override " + path);
  if (!doc.is_object()) doc = json::object();
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot - start);
    if (key.empty()) throw ParseError("override '" + path + "' has an empty key");
    if (dot == std::string::npos) {
      (*node)[key] = std::move(value);
      return;
    }
    json& child = (*node)[key];
    if (child.is_null()) child = json::object();
    if (!child.is_object()) throw ParseError("override '" + path + "': '" + key + "' is not a mapping");
    node = &child;
    start = dot + 1;
  }
}

}  // namespace llmconf
