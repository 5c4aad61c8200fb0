// Copyright (c) 2026 The llmconf Authors.
// SPDX-License-Identifier: Apache-2.0

#include "llmconf/types.hpp"

#include <string>

#include "llmconf/error.hpp"

namespace llmconf {
namespace {

constexpr std::array<std::string_view, kQuantCount> kQuantNames = {"fp16", "fp8", "int8",
                                                                   "int4"};
constexpr std::array<std::string_view, 3> kAttnNames = {"MHA", "GQA", "MLA"};
constexpr std::array<std::string_view, kOpKindCount> kOpNames = {
    "gemm",       "attention_context", "attention_generation", "allreduce",
    "allgather",  "alltoall",          "p2p",                  "moe_dispatch",
    "moe_combine", "moe_gemm",         "embedding",
};
constexpr std::array<std::string_view, kDimCount> kDimNames = {
    "m",        "n",        "k",          "batch",         "seq_len",
    "kv_len",   "num_heads", "kv_heads",  "head_dim",      "message_bytes",
    "participant_count", "tokens", "experts", "topk",      "hidden",
    "intermediate",
};

template <typename Enum, std::size_t N>
Enum lookup(const std::array<std::string_view, N>& names, std::string_view s,
            const char* what) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == s) return static_cast<Enum>(i);
  }
  throw ParseError(std::string("unknown ") + what + " '" + std::string(s) + "'");
}

}  // namespace

std::string_view to_string(Quant q) { return kQuantNames[static_cast<std::size_t>(q)]; }
std::string_view to_string(AttnKind a) { return kAttnNames[static_cast<std::size_t>(a)]; }
std::string_view to_string(OpKind k) { return kOpNames[static_cast<std::size_t>(k)]; }
std::string_view to_string(Dim d) { return kDimNames[static_cast<std::size_t>(d)]; }

Quant parse_quant(std::string_view s) { return lookup<Quant>(kQuantNames, s, "quant"); }
AttnKind parse_attn_kind(std::string_view s) {
  return lookup<AttnKind>(kAttnNames, s, "attn_kind");
}
OpKind parse_op_kind(std::string_view s) { return lookup<OpKind>(kOpNames, s, "kind"); }
Dim parse_dim(std::string_view s) { return lookup<Dim>(kDimNames, s, "dimension"); }

double bytes_per_element(Quant q) {
  switch (q) {
    case Quant::kFp16:
      return 2.0;
    case Quant::kFp8:
    case Quant::kInt8:
      return 1.0;
    case Quant::kInt4:
      return 0.5;
  }
  return 2.0;
}

bool is_attention(OpKind k) {
  return k == OpKind::kAttentionContext || k == OpKind::kAttentionGeneration;
}

bool is_collective(OpKind k) {
  return k == OpKind::kAllReduce || k == OpKind::kAllGather || k == OpKind::kAllToAll ||
         k == OpKind::kP2P;
}

bool is_moe(OpKind k) {
  return k == OpKind::kMoeDispatch || k == OpKind::kMoeCombine || k == OpKind::kMoeGemm;
}

}  // namespace llmconf
