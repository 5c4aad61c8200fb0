// Copyright (c) 2026 The llmconf Authors.
// SPDX-License-Identifier: Apache-2.0

#include "llmconf/model.hpp"

#include <algorithm>

#include "json_util.hpp"
#include "llmconf/error.hpp"

namespace llmconf {

using detail::json;

namespace {

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

int kv_heads_per_rank(const ModelSpec& m, int tp) { return std::max(1, m.kv_heads / tp); }

}  // namespace

int ParallelConfig::effective_ctx_capacity(std::int64_t isl) const {
  if (chunked_prefill) return ctx_capacity;
  return static_cast<int>(std::max<std::int64_t>(ctx_capacity, isl));
}

void validate(const ModelSpec& m) {
  auto positive = [&](std::int64_t v, const char* what) {
    if (v < 1) throw ValidationError("model '" + m.name + "': " + what + " must be >= 1");
  };
  positive(m.num_layers, "num_layers");
  positive(m.hidden, "hidden");
  positive(m.num_heads, "num_heads");
  positive(m.kv_heads, "kv_heads");
  positive(m.head_dim, "head_dim");
  positive(m.intermediate, "intermediate");
  positive(m.vocab, "vocab");
  positive(m.param_count, "param_count");
  positive(m.mla_latent_dim, "mla_latent_dim");
  if (m.num_heads % m.kv_heads != 0) {
    throw ValidationError("model '" + m.name + "': kv_heads must divide num_heads");
  }
  if (m.moe) {
    positive(m.moe->num_experts, "moe.num_experts");
    positive(m.moe->topk, "moe.topk");
    positive(m.moe->expert_intermediate, "moe.expert_intermediate");
    if (m.moe->shared_intermediate < 0) {
      throw ValidationError("model '" + m.name + "': moe.shared_intermediate must be >= 0");
    }
    if (m.moe->topk > m.moe->num_experts) {
      throw ValidationError("model '" + m.name + "': moe.topk exceeds num_experts");
    }
  }
}

int moe_tp(const ParallelConfig& cfg) { return std::max(1, cfg.tp * cfg.dp / cfg.ep); }

int local_experts(const ModelSpec& model, const ParallelConfig& cfg) {
  return model.moe ? model.moe->num_experts / cfg.ep : 0;
}

void check_consistency(const ModelSpec& m, const ParallelConfig& c) {
  auto fail = [&](const std::string& why) {
    throw ConfigError("config tp=" + std::to_string(c.tp) + " pp=" + std::to_string(c.pp) +
                      " ep=" + std::to_string(c.ep) + " dp=" + std::to_string(c.dp) +
                      " invalid for '" + m.name + "': " + why);
  };
  if (c.tp < 1 || c.pp < 1 || c.ep < 1 || c.dp < 1) fail("parallel degrees must be >= 1");
  if (c.batch < 1) fail("batch must be >= 1");
  if (c.ctx_capacity < 1) fail("ctx_capacity must be >= 1");
  if (!(c.kv_mem_fraction > 0 && c.kv_mem_fraction <= 1)) {
    fail("kv_mem_fraction must be in (0, 1]");
  }
  if (c.pp > m.num_layers) fail("pp exceeds num_layers");
  if (m.num_heads % c.tp != 0) fail("tp must divide num_heads");
  if (m.kv_heads % c.tp != 0 && c.tp % m.kv_heads != 0) {
    fail("tp and kv_heads must divide one another");
  }
  if (!m.moe) {
    if (c.ep != 1) fail("ep > 1 requires a MoE model");
    if (m.intermediate % c.tp != 0) fail("tp must divide intermediate");
    return;
  }
  if (m.moe->num_experts % c.ep != 0) fail("ep must divide the expert count");
  if ((c.tp * c.dp) % c.ep != 0) fail("ep must divide tp*dp");
  if (m.moe->expert_intermediate % moe_tp(c) != 0) {
    fail("tp*dp/ep must divide expert_intermediate");
  }
  if (m.moe->shared_intermediate % c.tp != 0) fail("tp must divide shared_intermediate");
}

std::int64_t balanced_routed_tokens(const ModelSpec& model, const ParallelConfig& cfg,
                                    std::int64_t step_tokens) {
  if (!model.moe) throw ConfigError("model '" + model.name + "' has no MoE block");
  // dp replicas route into the same expert grid.
  return ceil_div(step_tokens * cfg.dp * model.moe->topk, cfg.ep);
}

OperatorQuery moe_expert_query(const ModelSpec& model, const ParallelConfig& cfg,
                               std::int64_t routed_tokens) {
  if (!model.moe) throw ConfigError("model '" + model.name + "' has no MoE block");
  const MoeSpec& moe = *model.moe;
  OperatorQuery q;
  q.kind = OpKind::kMoeGemm;
  q.quant = model.weight_quant;
  q.backend = cfg.backend;
  q.shape.set(Dim::kTokens, routed_tokens)
      .set(Dim::kExperts, local_experts(model, cfg))
      .set(Dim::kTopk, moe.topk)
      .set(Dim::kHidden, model.hidden)
      .set(Dim::kIntermediate, moe.expert_intermediate / moe_tp(cfg));
  return q;
}

OperatorQuery moe_comm_query(const ModelSpec& model, const ParallelConfig& cfg, OpKind kind,
                             std::int64_t step_tokens) {
  if (!model.moe) throw ConfigError("model '" + model.name + "' has no MoE block");
  OperatorQuery q;
  q.kind = kind;
  q.quant = Quant::kFp16;
  q.backend = cfg.backend;
  q.shape.set(Dim::kTokens, step_tokens)
      .set(Dim::kExperts, model.moe->num_experts)
      .set(Dim::kTopk, model.moe->topk)
      .set(Dim::kHidden, model.hidden)
      .set(Dim::kParticipantCount, cfg.ep);
  return q;
}

bool is_consistent(const ModelSpec& model, const ParallelConfig& cfg) {
  try {
    check_consistency(model, cfg);
    return true;
  } catch (const ConfigError&) {
    return false;
  }
}

json to_json(const ModelSpec& m) {
  json j{{"name", m.name},
         {"num_layers", m.num_layers},
         {"hidden", m.hidden},
         {"num_heads", m.num_heads},
         {"kv_heads", m.kv_heads},
         {"head_dim", m.head_dim},
         {"intermediate", m.intermediate},
         {"vocab", m.vocab},
         {"attn_kind", std::string(to_string(m.attn_kind))},
         {"weight_quant", std::string(to_string(m.weight_quant))},
         {"kv_quant", std::string(to_string(m.kv_quant))},
         {"param_count", m.param_count}};
  if (m.attn_kind == AttnKind::kMLA) j["mla_latent_dim"] = m.mla_latent_dim;
  if (m.moe) {
    j["moe"] = json{{"num_experts", m.moe->num_experts},
                    {"topk", m.moe->topk},
                    {"expert_intermediate", m.moe->expert_intermediate},
                    {"shared_intermediate", m.moe->shared_intermediate}};
  }
  return j;
}

ModelSpec model_from_json(const json& j) {
  constexpr std::string_view where = "model";
  detail::reject_unknown_keys(
      j,
      {"name", "num_layers", "hidden", "num_heads", "kv_heads", "head_dim", "intermediate",
       "vocab", "attn_kind", "moe", "weight_quant", "kv_quant", "param_count", "mla_latent_dim"},
      where);
  ModelSpec m;
  m.name = detail::get_as<std::string>(j, "name", where);
  m.num_layers = detail::get_as<int>(j, "num_layers", where);
  m.hidden = detail::get_as<int>(j, "hidden", where);
  m.num_heads = detail::get_as<int>(j, "num_heads", where);
  m.kv_heads = detail::get_as<int>(j, "kv_heads", where);
  m.head_dim = detail::get_as<int>(j, "head_dim", where);
  m.intermediate = detail::get_as<int>(j, "intermediate", where);
  m.vocab = detail::get_as<int>(j, "vocab", where);
  m.attn_kind = parse_attn_kind(detail::get_as<std::string>(j, "attn_kind", where));
  m.weight_quant = parse_quant(detail::get_as<std::string>(j, "weight_quant", where));
  m.kv_quant = parse_quant(detail::get_as<std::string>(j, "kv_quant", where));
  m.param_count = detail::get_as<std::int64_t>(j, "param_count", where);
  m.mla_latent_dim = detail::get_or<int>(j, "mla_latent_dim", 576, where);
  if (j.contains("moe") && !j["moe"].is_null()) {
    const json& moe = j["moe"];
    constexpr std::string_view mwhere = "model.moe";
    detail::reject_unknown_keys(
        moe, {"num_experts", "topk", "expert_intermediate", "shared_intermediate"}, mwhere);
    MoeSpec spec;
    spec.num_experts = detail::get_as<int>(moe, "num_experts", mwhere);
    spec.topk = detail::get_as<int>(moe, "topk", mwhere);
    spec.expert_intermediate = detail::get_as<int>(moe, "expert_intermediate", mwhere);
    spec.shared_intermediate = detail::get_or<int>(moe, "shared_intermediate", 0, mwhere);
    m.moe = spec;
  }
  validate(m);
  return m;
}

ModelSpec load_model(const std::filesystem::path& path) {
  try {
    return model_from_json(detail::read_json_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

json to_json(const ParallelConfig& c) {
  return json{{"tp", c.tp},
              {"pp", c.pp},
              {"ep", c.ep},
              {"dp", c.dp},
              {"batch", c.batch},
              {"ctx_capacity", c.ctx_capacity},
              {"chunked_prefill", c.chunked_prefill},
              {"kv_mem_fraction", c.kv_mem_fraction},
              {"cuda_graph", c.cuda_graph},
              {"backend", c.backend}};
}

ParallelConfig parallel_config_from_json(const json& j) {
  constexpr std::string_view where = "config";
  detail::reject_unknown_keys(j,
                              {"tp", "pp", "ep", "dp", "batch", "ctx_capacity",
                               "chunked_prefill", "kv_mem_fraction", "cuda_graph", "backend"},
                              where);
  ParallelConfig c;
  c.tp = detail::get_or<int>(j, "tp", c.tp, where);
  c.pp = detail::get_or<int>(j, "pp", c.pp, where);
  c.ep = detail::get_or<int>(j, "ep", c.ep, where);
  c.dp = detail::get_or<int>(j, "dp", c.dp, where);
  c.batch = detail::get_or<int>(j, "batch", c.batch, where);
  c.ctx_capacity = detail::get_or<int>(j, "ctx_capacity", c.ctx_capacity, where);
  c.chunked_prefill = detail::get_or<bool>(j, "chunked_prefill", c.chunked_prefill, where);
  c.kv_mem_fraction = detail::get_or<double>(j, "kv_mem_fraction", c.kv_mem_fraction, where);
  c.cuda_graph = detail::get_or<bool>(j, "cuda_graph", c.cuda_graph, where);
  c.backend = detail::get_or<std::string>(j, "backend", c.backend, where);
  return c;
}

// ---------------------------------------------------------------------------

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::kPrefill:
      return "prefill";
    case Phase::kDecode:
      return "decode";
    case Phase::kMixed:
      return "mixed";
  }
  return "prefill";
}

Phase parse_phase(std::string_view s) {
  if (s == "prefill") return Phase::kPrefill;
  if (s == "decode") return Phase::kDecode;
  if (s == "mixed") return Phase::kMixed;
  throw ParseError("unknown phase '" + std::string(s) + "'");
}

StepShape StepShape::prefill(std::int64_t batch, std::int64_t seq_len) {
  return StepShape{Phase::kPrefill, batch, seq_len, 0, 0};
}

StepShape StepShape::decode(std::int64_t batch, std::int64_t kv_len) {
  return StepShape{Phase::kDecode, 0, 0, batch, kv_len};
}

StepShape StepShape::mixed(std::int64_t n_ctx, std::int64_t prompt_len, std::int64_t n_gen,
                           std::int64_t gen_kv_len) {
  StepShape s;
  if (n_ctx > 0) {
    s.ctx_seq_len = std::min(std::max<std::int64_t>(prompt_len, 1), n_ctx);
    s.ctx_batch = ceil_div(n_ctx, s.ctx_seq_len);
  }
  if (n_gen > 0) {
    s.gen_batch = n_gen;
    s.gen_kv_len = gen_kv_len;
  }
  s.phase = n_gen == 0 ? Phase::kPrefill : (n_ctx == 0 ? Phase::kDecode : Phase::kMixed);
  return s;
}

int IterationPlan::count(OpKind kind) const {
  int n = 0;
  for (const auto& e : entries) {
    if (e.query.kind == kind) n += e.repeat;
  }
  return n;
}

int IterationPlan::comm_count() const {
  int n = 0;
  for (const auto& e : entries) {
    if (is_collective(e.query.kind) || e.query.kind == OpKind::kMoeDispatch ||
        e.query.kind == OpKind::kMoeCombine) {
      n += e.repeat;
    }
  }
  return n;
}

IterationPlan decompose(const ModelSpec& m, const ParallelConfig& cfg, const StepShape& shape) {
  check_consistency(m, cfg);
  const std::int64_t tokens = shape.tokens();
  if (tokens < 1) throw ConfigError("step for '" + m.name + "' has no tokens");
  if ((shape.ctx_batch > 0) != (shape.ctx_seq_len > 0) ||
      (shape.gen_batch > 0) != (shape.gen_kv_len > 0) || shape.ctx_batch < 0 ||
      shape.gen_batch < 0) {
    throw ConfigError("malformed step shape for '" + m.name + "'");
  }

  IterationPlan plan;
  plan.phase = shape.phase;
  plan.shape = shape;
  plan.layers_per_stage = static_cast<int>(ceil_div(m.num_layers, cfg.pp));
  const int layers = plan.layers_per_stage;
  const int tp = cfg.tp;

  auto add = [&](std::string label, OpKind kind, Shape s, Quant quant, bool per_layer) {
    OperatorQuery q{kind, s, quant, cfg.backend};
    plan.entries.push_back(PlanEntry{std::move(label), std::move(q), per_layer ? layers : 1,
                                     per_layer});
  };
  auto gemm = [&](std::string label, std::int64_t mdim, std::int64_t n, std::int64_t k,
                  bool per_layer) {
    add(std::move(label), OpKind::kGemm,
        Shape().set(Dim::kM, mdim).set(Dim::kN, n).set(Dim::kK, k), m.weight_quant, per_layer);
  };
  auto allreduce = [&](std::string label) {
    if (tp <= 1) return;
    add(std::move(label), OpKind::kAllReduce,
        Shape()
            .set(Dim::kMessageBytes, tokens * m.hidden * 2)
            .set(Dim::kParticipantCount, tp),
        Quant::kFp16, true);
  };

  const int heads = m.num_heads / tp;
  const bool mla = m.attn_kind == AttnKind::kMLA;
  const int kv_heads = mla ? 1 : kv_heads_per_rank(m, tp);
  const int attn_head_dim = mla ? m.mla_latent_dim : m.head_dim;
  const std::int64_t qkv_n = mla ? std::int64_t{heads} * m.head_dim + m.mla_latent_dim
                                 : std::int64_t{heads + 2 * kv_heads} * m.head_dim;

  add("embedding", OpKind::kEmbedding,
      Shape().set(Dim::kTokens, tokens).set(Dim::kHidden, m.hidden), Quant::kFp16, false);

  gemm("qkv_proj", tokens, qkv_n, m.hidden, true);
  auto attention = [&](std::string label, OpKind kind, std::int64_t batch, std::int64_t seq) {
    add(std::move(label), kind,
        Shape()
            .set(Dim::kBatch, batch)
            .set(Dim::kSeqLen, seq)
            .set(Dim::kKvLen, seq)
            .set(Dim::kNumHeads, heads)
            .set(Dim::kKvHeads, kv_heads)
            .set(Dim::kHeadDim, attn_head_dim)
            .set_attn(m.attn_kind),
        m.kv_quant, true);
  };
  if (shape.ctx_batch > 0) {
    attention("context_attention", OpKind::kAttentionContext, shape.ctx_batch,
              shape.ctx_seq_len);
  }
  if (shape.gen_batch > 0) {
    attention("generation_attention", OpKind::kAttentionGeneration, shape.gen_batch,
              shape.gen_kv_len);
  }
  gemm("o_proj", tokens, m.hidden, std::int64_t{heads} * m.head_dim, true);
  allreduce("attn_allreduce");

  if (!m.moe) {
    gemm("mlp_gate_up", tokens, 2 * std::int64_t{m.intermediate} / tp, m.hidden, true);
    gemm("mlp_down", tokens, m.hidden, m.intermediate / tp, true);
  } else {
    const MoeSpec& moe = *m.moe;
    gemm("router", tokens, moe.num_experts, m.hidden, true);
    if (moe.shared_intermediate > 0) {
      gemm("shared_gate_up", tokens, 2 * std::int64_t{moe.shared_intermediate} / tp, m.hidden,
           true);
      gemm("shared_down", tokens, m.hidden, moe.shared_intermediate / tp, true);
    }
    auto moe_op = [&](std::string label, OperatorQuery q) {
      q.backend = cfg.backend;
      plan.entries.push_back(PlanEntry{std::move(label), std::move(q), layers, true});
    };
    if (cfg.ep > 1) moe_op("moe_dispatch", moe_comm_query(m, cfg, OpKind::kMoeDispatch, tokens));
    moe_op("moe_experts", moe_expert_query(m, cfg, balanced_routed_tokens(m, cfg, tokens)));
    if (cfg.ep > 1) moe_op("moe_combine", moe_comm_query(m, cfg, OpKind::kMoeCombine, tokens));
  }
  allreduce("mlp_allreduce");

  if (cfg.pp > 1) {
    add("pp_send", OpKind::kP2P,
        Shape().set(Dim::kMessageBytes, tokens * m.hidden * 2).set(Dim::kParticipantCount, 2),
        Quant::kFp16, false);
  }
  gemm("lm_head", shape.sequences(), ceil_div(m.vocab, tp), m.hidden, false);
  return plan;
}

IterationPlan decompose(const ModelSpec& model, const ParallelConfig& cfg, Phase phase,
                        std::int64_t n_ctx_tokens, std::int64_t n_gen_tokens,
                        std::int64_t seq_len) {
  if (seq_len < 1) throw ConfigError("seq_len must be >= 1");
  switch (phase) {
    case Phase::kPrefill:
      if (n_ctx_tokens < 1) throw ConfigError("prefill step with zero context tokens");
      return decompose(model, cfg, StepShape::mixed(n_ctx_tokens, seq_len, 0, 0));
    case Phase::kDecode:
      if (n_gen_tokens < 1) throw ConfigError("decode step with zero generation tokens");
      return decompose(model, cfg, StepShape::decode(n_gen_tokens, seq_len));
    case Phase::kMixed:
      if (n_ctx_tokens < 1 || n_gen_tokens < 1) {
        throw ConfigError("mixed step needs both context and generation tokens");
      }
      return decompose(model, cfg, StepShape::mixed(n_ctx_tokens, seq_len, n_gen_tokens,
                                                    seq_len));
  }
  throw ConfigError("unknown phase");
}

// ---------------------------------------------------------------------------

MemoryFootprint memory_footprint(const ModelSpec& m, const ParallelConfig& cfg) {
  MemoryFootprint f;
  const double wbytes = bytes_per_element(m.weight_quant);
  const double stage_split = static_cast<double>(cfg.tp) * cfg.pp;
  if (!m.moe) {
    f.weights = static_cast<double>(m.param_count) * wbytes / stage_split;
  } else {
    const double expert_params = static_cast<double>(m.num_layers) * m.moe->num_experts * 3.0 *
                                 m.hidden * m.moe->expert_intermediate;
    const double other = std::max(0.0, static_cast<double>(m.param_count) - expert_params);
    const double expert_split =
        static_cast<double>(cfg.ep) * moe_tp(cfg) * static_cast<double>(cfg.pp);
    f.weights = other * wbytes / stage_split + expert_params * wbytes / expert_split;
  }

  const double layers = static_cast<double>(ceil_div(m.num_layers, cfg.pp));
  const double kvbytes = bytes_per_element(m.kv_quant);
  if (m.attn_kind == AttnKind::kMLA) {
    f.kv_per_token = layers * m.mla_latent_dim * kvbytes;
  } else {
    f.kv_per_token = 2.0 * layers * kv_heads_per_rank(m, cfg.tp) * m.head_dim * kvbytes;
  }

  const double step_tokens = std::max(cfg.ctx_capacity, cfg.batch);
  const double qkv_width = static_cast<double>(m.num_heads / cfg.tp + 2 * kv_heads_per_rank(m, cfg.tp)) *
                           m.head_dim;
  const double ffn_width =
      m.moe ? 2.0 * m.moe->expert_intermediate / moe_tp(cfg) * m.moe->topk
            : 2.0 * m.intermediate / cfg.tp;
  const double widest = std::max({static_cast<double>(m.hidden), qkv_width, ffn_width});
  const double logits = static_cast<double>(cfg.batch) * ceil_div(m.vocab, cfg.tp) * 4.0;
  f.activation_reserve = step_tokens * widest * 2.0 + logits;
  return f;
}

bool fits_memory(const ModelSpec& model, const ParallelConfig& cfg, std::int64_t seq_tokens,
                 const HardwareSpec& hw) {
  const MemoryFootprint f = memory_footprint(model, cfg);
  const double reserved =
      f.weights + f.activation_reserve + kActivationMemoryFraction * hw.gpu_memory;
  if (reserved > hw.gpu_memory) return false;
  const double kv = f.kv_per_token * static_cast<double>(cfg.batch) *
                    static_cast<double>(seq_tokens);
  return kv <= cfg.kv_mem_fraction * (hw.gpu_memory - reserved);
}

}  // namespace llmconf
