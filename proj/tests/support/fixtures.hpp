// Copyright (c) 2026 The llmconf Authors.
// SPDX-License-Identifier: Apache-2.0

// Shared builders for tests: bundled data paths and small synthetic databases.

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "llmconf/hardware.hpp"
#include "llmconf/model.hpp"
#include "llmconf/perfdb.hpp"
#include "llmconf/synth.hpp"
#include "llmconf/workload.hpp"

namespace llmconf::testing {

inline std::filesystem::path source_dir() { return LLMCONF_SOURCE_DIR; }
inline std::filesystem::path data_dir() { return source_dir() / "data"; }
inline std::filesystem::path model_path(const std::string& name) {
  return data_dir() / "models" / (name + ".json");
}
inline std::filesystem::path bundled_db_path() {
  return data_dir() / "db" / "h100_sxm_synth.jsonl";
}

inline HardwareSpec h100() { return load_hardware(data_dir() / "hardware" / "h100_sxm.json"); }
inline ModelSpec qwen_small() { return load_model(model_path("qwen-small")); }
inline ModelSpec qwen_moe() { return load_model(model_path("qwen-moe-small")); }
inline ModelSpec mla_moe() { return load_model(model_path("mla-moe-lite")); }

// Every (tp, pp, ep, dp) of the default candidate space.
inline std::vector<ParallelConfig> default_configs() {
  const CandidateSpace space;
  std::vector<ParallelConfig> out;
  for (int tp : space.tp)
    for (int pp : space.pp)
      for (int ep : space.ep)
        for (int dp : space.dp) {
          ParallelConfig c;
          c.tp = tp;
          c.pp = pp;
          c.ep = ep;
          c.dp = dp;
          out.push_back(c);
        }
  return out;
}

// Synthetic DB covering `models` over the default space. A constant latency
// gives every lookup that value, whatever the query.
inline PerfDatabase synthetic_db(const std::vector<ModelSpec>& models, std::uint64_t seed = 7,
                                 std::optional<double> constant_us = std::nullopt,
                                 double amplitude = 0.8) {
  const auto spec = derive_grid_spec(models, default_configs());
  SynthOptions opts;
  opts.amplitude = amplitude;
  opts.constant_latency_us = constant_us;
  ExtrapolationPolicy policy;
  if (constant_us) policy = {Extrapolation::kClamp, Extrapolation::kClamp};
  return generate_synthetic_db(h100(), spec, seed, opts, policy);
}

}  // namespace llmconf::testing
