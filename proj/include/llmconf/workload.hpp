// Copyright (c) 2026 The llmconf Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "llmconf/model.hpp"
#include "llmconf/moe_load.hpp"

namespace llmconf {

enum class Mode : std::uint8_t { kStatic, kAggregated, kDisaggregated };
std::string_view to_string(Mode m);
Mode parse_mode(std::string_view s);

// Tunable constants of the serving-mode estimators. Defaults are the
// published values.
struct ServingConstants {
  int stride = 32;             // static-mode decode interpolation stride
  double f_corr_base = 2.0;    // aggregated TTFT correction: base
  double f_corr_offset = 3.0;  //   steps subtracted before scaling
  double f_corr_slope = 20.0;  //   divisor
  double f_corr_cap = 4.0;     //   upper bound
  int mix_warmup_steps = 3;    // mixed steps dropped from the TPOT weights
  double alpha_pre = 0.9;
  double alpha_dec = 0.92;
  double beta_ttft = 1.8;
  int max_prefill_workers = 32;
  int max_decode_workers = 64;

  friend bool operator==(const ServingConstants&, const ServingConstants&) = default;
};

// The parallelism and batching grid a search sweeps.
struct CandidateSpace {
  std::vector<int> tp{1, 2, 4, 8};
  std::vector<int> pp{1, 2, 4};
  std::vector<int> ep{1, 2, 4, 8};
  std::vector<int> dp{1, 2, 4, 8};
  std::string backend = "trtllm";
  int ctx_capacity = 2048;
  bool chunked_prefill = false;
  double kv_mem_fraction = 0.9;
  bool cuda_graph = true;

  friend bool operator==(const CandidateSpace&, const CandidateSpace&) = default;
};

struct WorkloadSpec {
  std::int64_t isl = 1024;
  std::int64_t osl = 128;
  std::int64_t prefix = 0;
  std::optional<double> ttft_limit;  // ms
  std::optional<double> tpot_limit;  // ms
  std::optional<double> min_speed;   // tokens/s/user
  std::vector<int> gpus_valid{1, 2, 4, 8};
  std::vector<Mode> modes{Mode::kAggregated, Mode::kDisaggregated};
  std::vector<int> batch_sweep{1, 2, 4, 8, 16, 32, 64, 128, 256, 512};
  PowerLawParams moe_load;
  CandidateSpace space;
  ServingConstants constants;

  // TTFT ceiling, +inf when unset.
  double ttft_bound() const;
  // TPOT ceiling: the tighter of tpot_limit and 1000 / min_speed, +inf when
  // neither is set.
  double tpot_bound() const;
  // Speed floor equivalent of tpot_bound(); 0 when unbounded.
  double speed_floor() const;
  bool gpu_count_valid(int gpus) const;
  bool has_mode(Mode m) const;

  friend bool operator==(const WorkloadSpec&, const WorkloadSpec&) = default;
};

// Throws ValidationError naming the offending field path.
void validate(const WorkloadSpec& w);

nlohmann::json to_json(const WorkloadSpec& w);
nlohmann::json to_json(const CandidateSpace& s);
// Strict: unknown keys are rejected with their path.
WorkloadSpec workload_from_json(const nlohmann::json& j);
CandidateSpace candidate_space_from_json(const nlohmann::json& j, CandidateSpace base = {});
// YAML or JSON by extension.
WorkloadSpec load_workload(const std::filesystem::path& path);
nlohmann::json load_workload_document(const std::filesystem::path& path);

// Applies "a.b.c=value" to a JSON document; the value is read as a YAML
// scalar or flow sequence. Throws ParseError on a malformed assignment.
void apply_override(nlohmann::json& doc, std::string_view assignment);

}  // namespace llmconf
