// Copyright (c) 2026 The llmconf Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "llmconf/model.hpp"
#include "llmconf/moe_load.hpp"
#include "llmconf/perfdb.hpp"

namespace llmconf {

struct StepLatency {
  double total = 0;                   // ms
  std::map<OpKind, double> breakdown;  // ms per operator kind
  // ms per plan entry label, repeats included; same order as the plan
  std::vector<std::pair<std::string, double>> ops;
  double pp_factor = 1.0;

  double breakdown_sum() const;
};

struct EstimatorOptions {
  // Route MoE blocks through a power-law load profile.
  bool moe_imbalance = true;
  PowerLawParams moe_load;
  // Multiply step latency by (M + pp - 1) / M, M = sequences in the step.
  bool pp_bubble = true;
};

// Step-latency oracle for one (db, model, config). Expert weights are
// sampled once at construction; every step reuses them.
class InferenceSession {
 public:
  InferenceSession(PerfDatabase db, ModelSpec model, ParallelConfig cfg,
                   EstimatorOptions options = {});

  const PerfDatabase& db() const { return db_; }
  const ModelSpec& model() const { return model_; }
  const ParallelConfig& config() const { return cfg_; }
  const EstimatorOptions& options() const { return options_; }

  StepLatency step(const StepShape& shape) const;

  // prefill: `batch` prompts of seq_len tokens; decode: `batch` sequences
  // attending to seq_len cached tokens.
  StepLatency get_step_latency(std::int64_t batch, std::int64_t seq_len, Phase phase) const;
  // n_ctx context tokens in ISL-sized prompts plus n_gen decoding sequences at
  // kv length ISL + OSL/2.
  StepLatency get_mix_latency(std::int64_t n_ctx, std::int64_t n_gen, std::int64_t isl,
                              std::int64_t osl) const;
  StepLatency get_gen_latency(std::int64_t n_gen, std::int64_t isl, std::int64_t osl) const;

  // Mean KV length of an in-flight decode request.
  static std::int64_t mean_decode_kv(std::int64_t isl, std::int64_t osl) { return isl + osl / 2; }

 private:
  PerfDatabase db_;
  ModelSpec model_;
  ParallelConfig cfg_;
  EstimatorOptions options_;
  std::vector<double> expert_weights_;
};

StepLatency get_step_latency(const PerfDatabase& db, const ModelSpec& model,
                             const ParallelConfig& cfg, std::int64_t batch, std::int64_t seq_len,
                             Phase phase, const EstimatorOptions& options = {});

}  // namespace llmconf
