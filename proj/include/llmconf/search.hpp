// Copyright (c) 2026 The llmconf Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "llmconf/serving.hpp"

namespace llmconf {

struct ParetoPoint {
  PerfEstimate estimate;
  std::optional<ParallelConfig> config;  // static and aggregated
  std::optional<DisaggPlan> plan;        // disaggregated
  bool sla_ok = false;

  Mode mode() const { return estimate.mode; }
};

struct Skip {
  Mode mode = Mode::kStatic;
  std::string config;  // human-readable config description
  std::string reason;
};

// ttft <= ttft limit and speed >= speed floor.
bool meets_sla(const PerfEstimate& e, const WorkloadSpec& w);

std::string describe(const ParallelConfig& cfg);

// Consistent, memory-fitting configs of the space, in tp, pp, ep, dp, batch
// order. Static and aggregated configs must also use a valid GPU count.
std::vector<ParallelConfig> enumerate_candidates(const CandidateSpace& space,
                                                 const ModelSpec& model,
                                                 const HardwareSpec& hw,
                                                 const WorkloadSpec& w);
// Worker configs for disaggregated pools: no GPU-count filter beyond fitting
// under the largest valid total.
std::vector<ParallelConfig> enumerate_worker_candidates(const CandidateSpace& space,
                                                        const ModelSpec& model,
                                                        const HardwareSpec& hw,
                                                        const WorkloadSpec& w);
// Raw Cartesian size of the space: |tp| * |pp| * |ep| * |dp| * |batch|.
std::size_t space_size(const CandidateSpace& space, const WorkloadSpec& w);

// Calls fn(i) for i in [0, n) on `jobs` threads (0 = hardware concurrency).
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn);

struct Evaluation {
  std::vector<ParetoPoint> points;
  std::vector<Skip> skipped;
  std::vector<double> per_candidate_ms;
};

// Static and aggregated points for `candidates` (one per requested mode), in
// candidate order. Failures become skip records.
Evaluation evaluate_space(const PerfDatabase& db, const ModelSpec& model,
                          std::span<const ParallelConfig> candidates, const WorkloadSpec& w,
                          unsigned jobs = 0);

// Indices of the points not dominated in (speed, throughput), ordered by
// descending speed; equal speeds keep input order.
std::vector<std::size_t> pareto_indices(std::span<const std::pair<double, double>> points);
std::vector<ParetoPoint> pareto_filter(std::span<const ParetoPoint> points);

struct NearMiss {
  ParetoPoint point;
  double violation = 0;  // largest relative SLA overshoot
  std::string reason;
};

struct Selection {
  std::vector<ParetoPoint> ranked;
  std::vector<NearMiss> diagnostics;  // filled when `ranked` is empty
};

// SLA-satisfying points by throughput per GPU, then speed, then fewer GPUs.
// When none qualifies, the smallest SLA violations are reported instead.
Selection select_best(std::span<const ParetoPoint> points, const WorkloadSpec& w,
                      std::size_t max_diagnostics = 3);

struct Timing {
  double total_ms = 0;
  double per_candidate_median_ms = 0;
  std::size_t candidates = 0;
};

struct SearchResult {
  WorkloadSpec workload;
  std::string model;
  std::string hardware;
  std::string backend;
  std::vector<ParetoPoint> points;    // every evaluated point
  std::vector<ParetoPoint> frontier;  // per mode, over TTFT-satisfying points
  Selection best;
  std::vector<Skip> skipped;
  Timing timing;
};

struct SearchOptions {
  unsigned jobs = 0;
  std::size_t candidate_cap = 0;  // 0 = unlimited
};

// Full pipeline: enumerate, evaluate every requested mode, build frontiers
// and rank. Throws CapacityError when the space exceeds the cap.
SearchResult run_search(const PerfDatabase& db, const ModelSpec& model, const WorkloadSpec& w,
                        const SearchOptions& options = {});

}  // namespace llmconf
