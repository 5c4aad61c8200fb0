// Copyright (c) 2026 The llmconf Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "llmconf/types.hpp"

namespace llmconf {

struct HardwareSpec {
  std::string name;
  double gpu_memory = 0;            // bytes
  double mem_bandwidth = 0;         // bytes/s
  std::array<std::optional<double>, kQuantCount> compute_throughput{};  // FLOP/s
  double intra_node_bandwidth = 0;  // bytes/s per link
  double inter_node_bandwidth = 0;  // bytes/s
  int gpus_per_node = 1;

  std::optional<double> compute_rate(Quant q) const {
    return compute_throughput[static_cast<std::size_t>(q)];
  }
  HardwareSpec& set_compute(Quant q, double flops) {
    compute_throughput[static_cast<std::size_t>(q)] = flops;
    return *this;
  }

  friend bool operator==(const HardwareSpec&, const HardwareSpec&) = default;
};

// Throws ValidationError if any rate or capacity is non-positive.
void validate(const HardwareSpec& hw);

nlohmann::json to_json(const HardwareSpec& hw);
HardwareSpec hardware_from_json(const nlohmann::json& j);
HardwareSpec load_hardware(const std::filesystem::path& path);

}  // namespace llmconf
