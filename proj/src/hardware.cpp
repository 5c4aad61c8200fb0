// Copyright (c) 2026 The llmconf Authors.
// SPDX-License-Identifier: Apache-2.0

#include "llmconf/hardware.hpp"

#include "json_util.hpp"

namespace llmconf {

using detail::json;

void validate(const HardwareSpec& hw) {
  auto positive = [&](double v, const char* what) {
    if (!(v > 0)) {
      throw ValidationError("hardware '" + hw.name + "': " + what + " must be positive");
    }
  };
  positive(hw.gpu_memory, "gpu_memory");
  positive(hw.mem_bandwidth, "mem_bandwidth");
  positive(hw.intra_node_bandwidth, "intra_node_bandwidth");
  positive(hw.inter_node_bandwidth, "inter_node_bandwidth");
  if (hw.gpus_per_node < 1) {
    throw ValidationError("hardware '" + hw.name + "': gpus_per_node must be >= 1");
  }
  bool any = false;
  for (const auto& rate : hw.compute_throughput) {
    if (rate) {
      positive(*rate, "compute_throughput");
      any = true;
    }
  }
  if (!any) throw ValidationError("hardware '" + hw.name + "': compute_throughput is empty");
}

json to_json(const HardwareSpec& hw) {
  json compute = json::object();
  for (std::size_t i = 0; i < kQuantCount; ++i) {
    if (hw.compute_throughput[i]) {
      compute[std::string(to_string(static_cast<Quant>(i)))] = *hw.compute_throughput[i];
    }
  }
  return json{{"name", hw.name},
              {"gpu_memory", hw.gpu_memory},
              {"mem_bandwidth", hw.mem_bandwidth},
              {"compute_throughput", compute},
              {"intra_node_bandwidth", hw.intra_node_bandwidth},
              {"inter_node_bandwidth", hw.inter_node_bandwidth},
              {"gpus_per_node", hw.gpus_per_node}};
}

HardwareSpec hardware_from_json(const json& j) {
  constexpr std::string_view where = "hardware";
  detail::reject_unknown_keys(j,
                              {"name", "gpu_memory", "mem_bandwidth", "compute_throughput",
                               "intra_node_bandwidth", "inter_node_bandwidth", "gpus_per_node"},
                              where);
  HardwareSpec hw;
  hw.name = detail::get_as<std::string>(j, "name", where);
  hw.gpu_memory = detail::get_as<double>(j, "gpu_memory", where);
  hw.mem_bandwidth = detail::get_as<double>(j, "mem_bandwidth", where);
  hw.intra_node_bandwidth = detail::get_as<double>(j, "intra_node_bandwidth", where);
  hw.inter_node_bandwidth = detail::get_as<double>(j, "inter_node_bandwidth", where);
  hw.gpus_per_node = detail::get_as<int>(j, "gpus_per_node", where);
  const json& compute = detail::require_field(j, "compute_throughput", where);
  detail::require_object(compute, "hardware.compute_throughput");
  for (const auto& [key, value] : compute.items()) {
    if (!value.is_number()) {
      throw ParseError("hardware.compute_throughput." + key + ": expected a number");
    }
    hw.set_compute(parse_quant(key), value.get<double>());
  }
  validate(hw);
  return hw;
}

HardwareSpec load_hardware(const std::filesystem::path& path) {
  try {
    return hardware_from_json(detail::read_json_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace llmconf
