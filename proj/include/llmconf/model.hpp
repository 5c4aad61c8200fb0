// Copyright (c) 2026 The llmconf Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "llmconf/hardware.hpp"
#include "llmconf/operator.hpp"

namespace llmconf {

struct MoeSpec {
  int num_experts = 1;
  int topk = 1;
  int expert_intermediate = 1;
  int shared_intermediate = 0;  // 0 = no shared expert

  friend bool operator==(const MoeSpec&, const MoeSpec&) = default;
};

struct ModelSpec {
  std::string name;
  int num_layers = 1;
  int hidden = 1;
  int num_heads = 1;
  int kv_heads = 1;
  int head_dim = 1;
  int intermediate = 1;
  int vocab = 1;
  AttnKind attn_kind = AttnKind::kGQA;
  std::optional<MoeSpec> moe;
  Quant weight_quant = Quant::kFp16;
  Quant kv_quant = Quant::kFp16;
  std::int64_t param_count = 1;
  int mla_latent_dim = 576;  // compressed KV width per token, MLA only

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

struct ParallelConfig {
  int tp = 1;
  int pp = 1;
  int ep = 1;
  int dp = 1;
  int batch = 1;
  int ctx_capacity = 2048;  // context tokens per step
  bool chunked_prefill = false;
  double kv_mem_fraction = 0.9;
  bool cuda_graph = true;
  std::string backend = "trtllm";

  // EP shards experts over the tp*dp rank grid, so it adds no GPUs.
  int gpus() const { return tp * pp * dp; }
  // Effective per-step context budget: without chunking a whole prompt must fit.
  int effective_ctx_capacity(std::int64_t isl) const;

  friend bool operator==(const ParallelConfig&, const ParallelConfig&) = default;
};

void validate(const ModelSpec& model);
// Throws ConfigError when cfg cannot run model.
void check_consistency(const ModelSpec& model, const ParallelConfig& cfg);
bool is_consistent(const ModelSpec& model, const ParallelConfig& cfg);

nlohmann::json to_json(const ModelSpec& model);
ModelSpec model_from_json(const nlohmann::json& j);
ModelSpec load_model(const std::filesystem::path& path);

nlohmann::json to_json(const ParallelConfig& cfg);
ParallelConfig parallel_config_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Iteration decomposition

enum class Phase : std::uint8_t { kPrefill, kDecode, kMixed };
std::string_view to_string(Phase p);
Phase parse_phase(std::string_view s);

// Token layout of one iteration step on one replica.
struct StepShape {
  Phase phase = Phase::kPrefill;
  std::int64_t ctx_batch = 0;    // sequences doing context (prefill) work
  std::int64_t ctx_seq_len = 0;  // new tokens per context sequence
  std::int64_t gen_batch = 0;    // sequences decoding one token
  std::int64_t gen_kv_len = 0;   // cached tokens each decoding sequence attends to

  std::int64_t tokens() const { return ctx_batch * ctx_seq_len + gen_batch; }
  std::int64_t sequences() const { return ctx_batch + gen_batch; }

  static StepShape prefill(std::int64_t batch, std::int64_t seq_len);
  static StepShape decode(std::int64_t batch, std::int64_t kv_len);
  // Context work of n_ctx tokens split into prompts of at most `prompt_len`
  // tokens, plus n_gen decoding sequences.
  static StepShape mixed(std::int64_t n_ctx, std::int64_t prompt_len, std::int64_t n_gen,
                         std::int64_t gen_kv_len);
};

struct PlanEntry {
  std::string label;     // "qkv_proj", "attn_allreduce", ...
  OperatorQuery query;
  int repeat = 1;        // num_layers/pp for per-layer ops, 1 otherwise
  bool per_layer = false;
};

struct IterationPlan {
  Phase phase = Phase::kPrefill;
  int layers_per_stage = 1;
  StepShape shape;
  std::vector<PlanEntry> entries;

  // Sum of repeat counts over entries of `kind`.
  int count(OpKind kind) const;
  int comm_count() const;
};

// Ordered per-rank operator sequence for one pipeline stage. Throws
// ConfigError for an inconsistent config or a step with no tokens.
IterationPlan decompose(const ModelSpec& model, const ParallelConfig& cfg,
                        const StepShape& shape);

// Positional form: prefill uses n_ctx_tokens split into seq_len prompts,
// decode uses n_gen_tokens sequences at kv length seq_len, mixed combines both.
IterationPlan decompose(const ModelSpec& model, const ParallelConfig& cfg, Phase phase,
                        std::int64_t n_ctx_tokens, std::int64_t n_gen_tokens,
                        std::int64_t seq_len);

// Experts per rank and the expert-FFN tensor-parallel width (tp*dp/ep).
int local_experts(const ModelSpec& model, const ParallelConfig& cfg);
int moe_tp(const ParallelConfig& cfg);

// MoE operator queries for a step of `step_tokens` tokens per rank.
// Expert GEMM over `routed_tokens` token-expert pairs on one rank.
OperatorQuery moe_expert_query(const ModelSpec& model, const ParallelConfig& cfg,
                               std::int64_t routed_tokens);
// kMoeDispatch or kMoeCombine.
OperatorQuery moe_comm_query(const ModelSpec& model, const ParallelConfig& cfg, OpKind kind,
                             std::int64_t step_tokens);
// Balanced per-rank routed pairs: ceil(step_tokens * dp * topk / ep).
std::int64_t balanced_routed_tokens(const ModelSpec& model, const ParallelConfig& cfg,
                                    std::int64_t step_tokens);

// ---------------------------------------------------------------------------
// Memory

struct MemoryFootprint {
  double weights = 0;             // bytes per GPU
  double kv_per_token = 0;        // bytes per GPU per cached token
  double activation_reserve = 0;  // largest single-step activation estimate

  double total(std::int64_t batch, std::int64_t seq) const {
    return weights + kv_per_token * static_cast<double>(batch) * static_cast<double>(seq) +
           activation_reserve;
  }
};

inline constexpr double kActivationMemoryFraction = 0.05;

MemoryFootprint memory_footprint(const ModelSpec& model, const ParallelConfig& cfg);

// weights + 5% of GPU memory + activation_reserve must fit, and the KV cache
// for batch * seq_tokens tokens must fit in kv_mem_fraction of what is left.
// Inclusive at the boundary.
bool fits_memory(const ModelSpec& model, const ParallelConfig& cfg, std::int64_t seq_tokens,
                 const HardwareSpec& hw);

}  // namespace llmconf
