// Copyright (c) 2026 The llmconf Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "llmconf/estimator.hpp"
#include "llmconf/workload.hpp"

namespace llmconf {

struct Metrics {
  double speed = 0;               // tokens/s/user, +inf when tpot == 0
  double throughput_per_gpu = 0;  // tokens/s/GPU
};

// speed = 1000 / tpot; throughput = 1000 / (ttft + (osl - 1) * tpot) * batch * osl / gpus.
Metrics derive_metrics(double ttft_ms, double tpot_ms, std::int64_t osl, std::int64_t batch,
                       int total_gpus);

struct PerfEstimate {
  Mode mode = Mode::kStatic;
  double ttft = 0;  // ms
  double tpot = 0;  // ms
  double speed = 0;
  double throughput_per_gpu = 0;
  std::int64_t batch = 0;  // concurrent requests in the deployment (batch * dp)
  int gpus = 0;
  // Step counts and latencies behind the estimate, in insertion order.
  std::vector<std::pair<std::string, double>> breakdown;
};

// Aggregated-mode schedule for (B, ISL, OSL, C_ctx) before any latency
// lookups.
struct AggregatedSchedule {
  std::int64_t total_ctx_steps = 0;  // ceil(ISL * B / C_ctx)
  bool context_dominant = false;
  std::int64_t mix_steps = 0;
  std::int64_t gen_steps = 0;
  std::int64_t mix_ctx_tokens = 0;
  std::int64_t mix_gen_tokens = 0;
};

// Throws InfeasibleError when the standard branch leaves no generation slot.
AggregatedSchedule aggregated_schedule(std::int64_t batch, std::int64_t isl, std::int64_t osl,
                                       std::int64_t ctx_capacity);

// min(base + (T - offset) / slope, cap), floored at base.
double ttft_correction(std::int64_t total_ctx_steps, const ServingConstants& c = {});

// Static-mode pieces.
double static_ttft(const InferenceSession& s, const WorkloadSpec& w);
double static_tpot(const InferenceSession& s, const WorkloadSpec& w, int stride);

// Throw InfeasibleError when the config does not fit in GPU memory.
PerfEstimate estimate_static(const InferenceSession& s, const WorkloadSpec& w);
PerfEstimate estimate_aggregated(const InferenceSession& s, const WorkloadSpec& w);

PerfEstimate estimate_static(const PerfDatabase& db, const ModelSpec& model,
                             const ParallelConfig& cfg, const WorkloadSpec& w);
PerfEstimate estimate_aggregated(const PerfDatabase& db, const ModelSpec& model,
                                 const ParallelConfig& cfg, const WorkloadSpec& w);

// Options for a session built from a workload (MoE load parameters).
EstimatorOptions estimator_options(const WorkloadSpec& w);

// ---------------------------------------------------------------------------
// Disaggregated serving

// One worker configuration for a prefill or decode pool.
struct DisaggCandidate {
  ParallelConfig cfg;
  double latency = 0;         // ms: static TTFT (prefill) or TPOT (decode)
  double seq_throughput = 0;  // requests/s completed by one worker
  int gpus = 0;
};

struct DisaggPlan {
  ParallelConfig prefill_cfg;
  ParallelConfig decode_cfg;
  int x = 0;  // prefill workers
  int y = 0;  // decode workers
  double r_pre = 0;
  double r_dec = 0;
  double r_sys = 0;               // requests/s
  double throughput_per_gpu = 0;  // requests/s/GPU
  double ttft = 0;                // ms, prefill latency * beta_ttft
  double tpot = 0;                // ms
  int gpus = 0;
  std::size_t prefill_index = 0;  // into the candidate list
  std::size_t decode_index = 0;
};

// Requests/s one worker completes: prefill batch*dp per TTFT, decode
// batch*dp per (OSL - 1) * TPOT (+inf when OSL == 1).
double prefill_seq_throughput(const ParallelConfig& cfg, double ttft_ms);
double decode_seq_throughput(const ParallelConfig& cfg, double tpot_ms, std::int64_t osl);

// Best (x, y) over the full candidate grid. std::nullopt when no prefill
// candidate meets the TTFT limit, no decode candidate meets the TPOT limit,
// or no (x, y) lands on a valid GPU count.
std::optional<DisaggPlan> estimate_disaggregated(std::span<const DisaggCandidate> prefill,
                                                 std::span<const DisaggCandidate> decode,
                                                 const WorkloadSpec& w);

// Best plan for each decode candidate that admits one, in decode order.
std::vector<DisaggPlan> disaggregated_plans(std::span<const DisaggCandidate> prefill,
                                            std::span<const DisaggCandidate> decode,
                                            const WorkloadSpec& w);

// True when `a` ranks strictly ahead of `b`: higher throughput per GPU, then
// fewer GPUs, lower TTFT, smaller (x, y), smaller candidate indices.
bool plan_better(const DisaggPlan& a, const DisaggPlan& b);

PerfEstimate to_estimate(const DisaggPlan& plan, const WorkloadSpec& w);

}  // namespace llmconf
