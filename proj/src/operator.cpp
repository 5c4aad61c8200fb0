// Copyright (c) 2026 The llmconf Authors.
// SPDX-License-Identifier: Apache-2.0

#include "llmconf/operator.hpp"

#include <algorithm>
#include <sstream>

#include "llmconf/error.hpp"

namespace llmconf {
namespace {

constexpr std::array kGemmDims = {Dim::kM, Dim::kN, Dim::kK};
constexpr std::array kAttnDims = {Dim::kBatch,    Dim::kSeqLen,  Dim::kKvLen,
                                  Dim::kNumHeads, Dim::kKvHeads, Dim::kHeadDim};
constexpr std::array kCommDims = {Dim::kMessageBytes, Dim::kParticipantCount};
constexpr std::array kMoeGemmDims = {Dim::kTokens, Dim::kExperts, Dim::kTopk, Dim::kHidden,
                                     Dim::kIntermediate};
constexpr std::array kMoeCommDims = {Dim::kTokens, Dim::kExperts, Dim::kTopk, Dim::kHidden,
                                     Dim::kParticipantCount};
constexpr std::array kEmbeddingDims = {Dim::kTokens, Dim::kHidden};

constexpr std::array kGemmInterp = {Dim::kM};
constexpr std::array kAttnInterp = {Dim::kBatch, Dim::kSeqLen};
constexpr std::array kCommInterp = {Dim::kMessageBytes};
constexpr std::array kTokenInterp = {Dim::kTokens};

}  // namespace

std::span<const Dim> required_dims(OpKind kind) {
  switch (kind) {
    case OpKind::kGemm:
      return kGemmDims;
    case OpKind::kAttentionContext:
    case OpKind::kAttentionGeneration:
      return kAttnDims;
    case OpKind::kAllReduce:
    case OpKind::kAllGather:
    case OpKind::kAllToAll:
    case OpKind::kP2P:
      return kCommDims;
    case OpKind::kMoeGemm:
      return kMoeGemmDims;
    case OpKind::kMoeDispatch:
    case OpKind::kMoeCombine:
      return kMoeCommDims;
    case OpKind::kEmbedding:
      return kEmbeddingDims;
  }
  return {};
}

std::span<const Dim> interpolated_dims(OpKind kind) {
  switch (kind) {
    case OpKind::kGemm:
      return kGemmInterp;
    case OpKind::kAttentionContext:
    case OpKind::kAttentionGeneration:
      return kAttnInterp;
    case OpKind::kAllReduce:
    case OpKind::kAllGather:
    case OpKind::kAllToAll:
    case OpKind::kP2P:
      return kCommInterp;
    case OpKind::kMoeGemm:
    case OpKind::kMoeDispatch:
    case OpKind::kMoeCombine:
    case OpKind::kEmbedding:
      return kTokenInterp;
  }
  return {};
}

bool is_derived_dim(OpKind kind, Dim d) { return is_attention(kind) && d == Dim::kKvLen; }

void validate_query(const OperatorQuery& q) {
  const auto req = required_dims(q.kind);
  for (std::size_t i = 0; i < kDimCount; ++i) {
    const auto d = static_cast<Dim>(i);
    const bool needed = std::find(req.begin(), req.end(), d) != req.end();
    const auto v = q.shape.get(d);
    if (v < 0) {
      throw ValidationError(describe(q) + ": dimension " + std::string(to_string(d)) +
                            " must be >= 1");
    }
    if (needed && v == 0) {
      throw ValidationError(describe(q) + ": missing dimension " +
                            std::string(to_string(d)));
    }
    if (!needed && v != 0) {
      throw ValidationError(describe(q) + ": dimension " + std::string(to_string(d)) +
                            " not valid for " + std::string(to_string(q.kind)));
    }
  }
  if (is_attention(q.kind) != q.shape.attn().has_value()) {
    throw ValidationError(describe(q) + ": attn_kind must be present iff kind is attention");
  }
  if (q.kind == OpKind::kAttentionContext &&
      q.shape.get(Dim::kKvLen) < q.shape.get(Dim::kSeqLen)) {
    throw ValidationError(describe(q) + ": context attention needs kv_len >= seq_len");
  }
  if (q.kind == OpKind::kAttentionGeneration &&
      q.shape.get(Dim::kKvLen) != q.shape.get(Dim::kSeqLen)) {
    throw ValidationError(describe(q) + ": generation attention needs kv_len == seq_len");
  }
}

std::string describe(const OperatorQuery& q) {
  std::ostringstream os;
  os << to_string(q.kind) << '/' << to_string(q.quant) << '{';
  bool first = true;
  for (Dim d : required_dims(q.kind)) {
    if (!first) os << ',';
    first = false;
    os << to_string(d) << '=' << q.shape.get(d);
  }
  if (q.shape.attn()) os << ",attn_kind=" << to_string(*q.shape.attn());
  os << '}';
  return os.str();
}

}  // namespace llmconf
