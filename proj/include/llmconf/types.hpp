// Copyright (c) 2026 The llmconf Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace llmconf {

enum class Quant : std::uint8_t { kFp16, kFp8, kInt8, kInt4 };
inline constexpr std::size_t kQuantCount = 4;

enum class AttnKind : std::uint8_t { kMHA, kGQA, kMLA };

enum class OpKind : std::uint8_t {
  kGemm,
  kAttentionContext,
  kAttentionGeneration,
  kAllReduce,
  kAllGather,
  kAllToAll,
  kP2P,
  kMoeDispatch,
  kMoeCombine,
  kMoeGemm,
  kEmbedding,
};
inline constexpr std::size_t kOpKindCount = 11;

// Named integer dimensions an OperatorQuery shape may carry.
enum class Dim : std::uint8_t {
  kM,
  kN,
  kK,
  kBatch,
  kSeqLen,
  kKvLen,
  kNumHeads,
  kKvHeads,
  kHeadDim,
  kMessageBytes,
  kParticipantCount,
  kTokens,
  kExperts,
  kTopk,
  kHidden,
  kIntermediate,
};
inline constexpr std::size_t kDimCount = 16;

std::string_view to_string(Quant q);
std::string_view to_string(AttnKind a);
std::string_view to_string(OpKind k);
std::string_view to_string(Dim d);

// These throw ParseError on unknown spellings.
Quant parse_quant(std::string_view s);
AttnKind parse_attn_kind(std::string_view s);
OpKind parse_op_kind(std::string_view s);
Dim parse_dim(std::string_view s);

// Storage size of one element; int4 packs two per byte.
double bytes_per_element(Quant q);

bool is_attention(OpKind k);
bool is_collective(OpKind k);  // allreduce, allgather, alltoall, p2p
bool is_moe(OpKind k);

inline constexpr std::array<OpKind, kOpKindCount> kAllOpKinds = {
    OpKind::kGemm,        OpKind::kAttentionContext, OpKind::kAttentionGeneration,
    OpKind::kAllReduce,   OpKind::kAllGather,        OpKind::kAllToAll,
    OpKind::kP2P,         OpKind::kMoeDispatch,      OpKind::kMoeCombine,
    OpKind::kMoeGemm,     OpKind::kEmbedding,
};

}  // namespace llmconf
