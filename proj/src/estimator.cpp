// Copyright (c) 2026 The llmconf Authors.
// SPDX-License-Identifier: Apache-2.0

#include "llmconf/estimator.hpp"

#include "llmconf/error.hpp"

namespace llmconf {

namespace {
constexpr double kMsPerUs = 1e-3;
}

double StepLatency::breakdown_sum() const {
  double s = 0;
  for (const auto& [_, ms] : breakdown) s += ms;
  return s;
}

InferenceSession::InferenceSession(PerfDatabase db, ModelSpec model, ParallelConfig cfg,
                                   EstimatorOptions options)
    : db_(std::move(db)), model_(std::move(model)), cfg_(std::move(cfg)),
      options_(std::move(options)) {
  check_consistency(model_, cfg_);
  if (model_.moe && options_.moe_imbalance) {
    expert_weights_ = sample_weights(model_.moe->num_experts, options_.moe_load);
  }
}

StepLatency InferenceSession::step(const StepShape& shape) const {
  const IterationPlan plan = decompose(model_, cfg_, shape);
  StepLatency out;
  if (options_.pp_bubble && cfg_.pp > 1) {
    const auto m = static_cast<double>(std::max<std::int64_t>(1, shape.sequences()));
    out.pp_factor = (m + cfg_.pp - 1) / m;
  }

  std::optional<MoeBlockLatency> moe;
  if (!expert_weights_.empty()) {
    const ExpertLoadProfile profile =
        tokens_per_expert(expert_weights_, shape.tokens() * cfg_.dp, model_.moe->topk);
    moe = moe_block_latency(db_, model_, cfg_, profile);
  }

  for (const auto& entry : plan.entries) {
    double us;
    if (moe && entry.query.kind == OpKind::kMoeGemm) {
      us = moe->experts_us;
    } else if (moe && entry.query.kind == OpKind::kMoeDispatch) {
      us = moe->dispatch_us;
    } else if (moe && entry.query.kind == OpKind::kMoeCombine) {
      us = moe->combine_us;
    } else {
      us = db_.query_latency(entry.query);
    }
    const double ms = us * kMsPerUs * entry.repeat * out.pp_factor;
    out.breakdown[entry.query.kind] += ms;
    out.ops.emplace_back(entry.label, ms);
  }
  out.total = out.breakdown_sum();
  return out;
}

StepLatency InferenceSession::get_step_latency(std::int64_t batch, std::int64_t seq_len,
                                               Phase phase) const {
  if (batch < 1 || seq_len < 1) throw ValidationError("batch and seq_len must be >= 1");
  switch (phase) {
    case Phase::kPrefill:
      return step(StepShape::prefill(batch, seq_len));
    case Phase::kDecode:
      return step(StepShape::decode(batch, seq_len));
    case Phase::kMixed:
      break;
  }
  throw ValidationError("get_step_latency takes prefill or decode");
}

StepLatency InferenceSession::get_mix_latency(std::int64_t n_ctx, std::int64_t n_gen,
                                              std::int64_t isl, std::int64_t osl) const {
  if (n_ctx < 0 || n_gen < 0 || (n_ctx == 0 && n_gen == 0)) {
    throw ValidationError("mixed step needs context or generation tokens");
  }
  return step(StepShape::mixed(n_ctx, isl, n_gen, mean_decode_kv(isl, osl)));
}

StepLatency InferenceSession::get_gen_latency(std::int64_t n_gen, std::int64_t isl,
                                              std::int64_t osl) const {
  if (n_gen < 1) throw ValidationError("generation step needs n_gen >= 1");
  return step(StepShape::decode(n_gen, mean_decode_kv(isl, osl)));
}

StepLatency get_step_latency(const PerfDatabase& db, const ModelSpec& model,
                             const ParallelConfig& cfg, std::int64_t batch, std::int64_t seq_len,
                             Phase phase, const EstimatorOptions& options) {
  return InferenceSession(db, model, cfg, options).get_step_latency(batch, seq_len, phase);
}

}  // namespace llmconf
