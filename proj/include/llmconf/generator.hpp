// Copyright (c) 2026 The llmconf Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "llmconf/search.hpp"

namespace llmconf {

// Config field a backend flag is resolved from.
enum class FlagSource {
  kNone,  // fixed value
  kTp,
  kPp,
  kEp,
  kDp,
  kBatch,
  kCtxCapacity,
  kKvMemFraction,
  kCudaGraph,
  kChunkedPrefill,
};

std::string_view to_string(FlagSource s);
FlagSource parse_flag_source(std::string_view s);

using FlagValue = std::variant<bool, std::int64_t, double, std::string>;

struct FlagRule {
  std::string flag;
  FlagSource source = FlagSource::kNone;
  bool invert = false;         // bool sources: emit the negation
  bool enable_above_one = false;  // int sources: emit (value > 1) as a bool
  bool gated_by_chunking = false;  // int sources: emit off_value unless chunked prefill is on
  std::int64_t off_value = -1;
  std::optional<FlagValue> value;  // kNone only
  bool curated = true;  // false for the flags spelled exactly as the engine documents them
};

struct BackendProfile {
  std::string backend;
  std::string version;
  std::string launcher;
  bool bool_as_switch = false;  // true: pass `--flag` alone, omit when false
  std::vector<FlagRule> rules;
};

void validate(const BackendProfile& p);
BackendProfile backend_profile_from_json(const nlohmann::json& j);
BackendProfile load_backend_profile(const std::filesystem::path& path);

// Profiles keyed by (backend, version), in lexicographic order.
class ProfileRegistry {
 public:
  void add(BackendProfile p);
  const BackendProfile& find(const std::string& backend, const std::string& version) const;
  // Highest version for `backend` (string order).
  const BackendProfile& latest(const std::string& backend) const;
  std::vector<std::pair<std::string, std::string>> keys() const;
  bool empty() const { return profiles_.empty(); }

 private:
  std::map<std::pair<std::string, std::string>, BackendProfile> profiles_;
};

// Every *.json under `dir`.
ProfileRegistry load_profiles(const std::filesystem::path& dir);
// $LLMCONF_DATA/backends, else the bundled data directory.
std::filesystem::path default_profile_dir();

struct Pool {
  std::string role;  // aggregated | static | prefill | decode
  int replicas = 1;
  int tp = 1;
  int pp = 1;
  int ep = 1;
  int dp = 1;
  std::vector<std::pair<std::string, FlagValue>> flags;

  int gpus_per_replica() const { return tp * pp * dp; }
  int gpus() const { return replicas * gpus_per_replica(); }
};

struct Predicted {
  Mode mode = Mode::kAggregated;
  double ttft_ms = 0;
  double tpot_ms = 0;
  double speed = 0;
  double throughput_per_gpu = 0;
  int gpus = 0;
};

struct LaunchPlan {
  std::string backend;
  std::string version;
  std::string model;
  std::string launcher;
  bool bool_as_switch = false;
  Predicted predicted;
  std::vector<Pool> pools;

  int gpus() const;
};

// Flags for one worker config, in profile order.
std::vector<std::pair<std::string, FlagValue>> resolve_flags(const BackendProfile& profile,
                                                             const ParallelConfig& cfg);

// One pool for static/aggregated points, prefill + decode pools for
// disaggregated plans. Throws ValidationError when the pools do not add up to
// the point's GPU count.
LaunchPlan make_launch_plan(const ParetoPoint& point, const std::string& model,
                            const BackendProfile& profile);

// Throws ValidationError unless sum(replicas * gpus) == predicted.gpus.
void check_topology(const LaunchPlan& plan);

std::string emit_yaml(const LaunchPlan& plan);
LaunchPlan parse_launch_yaml(const std::string& text);

// The full command line for one pool replica.
std::string command_line(const LaunchPlan& plan, const Pool& pool);

inline std::string emit_launch(const ParetoPoint& point, const std::string& model,
                               const BackendProfile& profile) {
  return emit_yaml(make_launch_plan(point, model, profile));
}

}  // namespace llmconf
