// Copyright (c) 2026 The llmconf Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "llmconf/model.hpp"
#include "llmconf/perfdb.hpp"

namespace llmconf {

// Values sampled along each interpolated dimension.
using GridAxes = std::map<Dim, std::vector<std::int64_t>>;

// Powers of two: m and tokens 1..2^20, batch 1..1024, seq_len 1..2^17,
// message_bytes 2^10..2^34.
GridAxes default_grid_axes();

// One grid to synthesize: a query template whose interpolated dims are
// unset, plus optional per-entry axis overrides.
struct GridEntry {
  OperatorQuery base;
  GridAxes axes;
};

struct GridSpec {
  GridAxes axes;  // defaults shared by every entry
  std::vector<GridEntry> entries;

  // Axis values for `d` in `entry`, falling back to the shared defaults.
  const std::vector<std::int64_t>& axis(const GridEntry& entry, Dim d) const;
};

// Throws ValidationError for empty or unsorted axes and malformed templates.
void validate(const GridSpec& spec);

nlohmann::json to_json(const GridSpec& spec);
GridSpec grid_spec_from_json(const nlohmann::json& j);
GridSpec load_grid_spec(const std::filesystem::path& path);

// Every operator key any consistent (model, config) pair can ask for, with
// `axes` as the shared axis values. Entries are sorted and unique.
GridSpec derive_grid_spec(std::span<const ModelSpec> models,
                          std::span<const ParallelConfig> configs, GridAxes axes = {});

struct SynthOptions {
  std::string backend = "trtllm";
  std::string backend_version = "1.0.0";
  double amplitude = 0.8;                    // efficiency in [2 - a, 2 + a], a <= 1
  std::optional<double> constant_latency_us;  // every record gets this latency instead
};

// Deterministic efficiency factor in [1, 3] for `q` within `entry`.
double synthetic_efficiency(const GridSpec& spec, const GridEntry& entry,
                            const OperatorQuery& q, std::uint64_t seed, double amplitude);

// latency = sol_estimate * synthetic_efficiency at every grid coordinate.
DbContents synthesize(const HardwareSpec& hw, const GridSpec& spec, std::uint64_t seed,
                      const SynthOptions& options = {});

PerfDatabase generate_synthetic_db(const HardwareSpec& hw, const GridSpec& spec,
                                   std::uint64_t seed, const SynthOptions& options = {},
                                   ExtrapolationPolicy policy = {});

}  // namespace llmconf
