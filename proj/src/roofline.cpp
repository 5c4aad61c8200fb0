// Copyright (c) 2026 The llmconf Authors.
// SPDX-License-Identifier: Apache-2.0

#include "llmconf/roofline.hpp"

#include <algorithm>
#include <string>

#include "llmconf/error.hpp"

namespace llmconf {
namespace {

constexpr double kActivationBytes = 2.0;  // activations and outputs stay fp16
constexpr double kMicros = 1e6;
// Lower bound for communication estimates so single-participant groups stay > 0.
constexpr double kMinCommMicros = 1e-3;

double d(const OperatorQuery& q, Dim dim) { return static_cast<double>(q.shape.get(dim)); }

// K/V elements stored per cached token. MLA keeps one shared latent vector.
double kv_elements_per_token(const OperatorQuery& q) {
  const double per_head = d(q, Dim::kKvHeads) * d(q, Dim::kHeadDim);
  return *q.shape.attn() == AttnKind::kMLA ? per_head : 2.0 * per_head;
}

}  // namespace

OperatorCost operator_cost(const OperatorQuery& q) {
  const double b = bytes_per_element(q.quant);
  OperatorCost c;
  switch (q.kind) {
    case OpKind::kGemm: {
      const double m = d(q, Dim::kM), n = d(q, Dim::kN), k = d(q, Dim::kK);
      c.flops = 2.0 * m * n * k;
      c.bytes = (m * k + k * n) * b + m * n * kActivationBytes;
      break;
    }
    case OpKind::kAttentionContext: {
      const double batch = d(q, Dim::kBatch), seq = d(q, Dim::kSeqLen),
                   kv = d(q, Dim::kKvLen), heads = d(q, Dim::kNumHeads),
                   hd = d(q, Dim::kHeadDim);
      // QK^T and PV are 2*b*h*s*kv*d each; the causal mask halves the sum.
      c.flops = 2.0 * batch * heads * seq * kv * hd;
      c.bytes = 2.0 * batch * seq * heads * hd * kActivationBytes +
                batch * kv * kv_elements_per_token(q) * b;
      break;
    }
    case OpKind::kAttentionGeneration: {
      const double batch = d(q, Dim::kBatch), kv = d(q, Dim::kKvLen),
                   heads = d(q, Dim::kNumHeads), hd = d(q, Dim::kHeadDim);
      c.flops = 4.0 * batch * heads * kv * hd;
      c.bytes = batch * kv * kv_elements_per_token(q) * b +
                2.0 * batch * heads * hd * kActivationBytes;
      break;
    }
    case OpKind::kAllReduce:
    case OpKind::kAllGather:
    case OpKind::kAllToAll:
    case OpKind::kP2P:
      c.wire_bytes = d(q, Dim::kMessageBytes) *
                     comm_algorithm_factor(q.kind, q.shape.get(Dim::kParticipantCount));
      break;
    case OpKind::kMoeDispatch:
    case OpKind::kMoeCombine:
      c.wire_bytes = d(q, Dim::kTokens) * d(q, Dim::kTopk) * d(q, Dim::kHidden) * b *
                     comm_algorithm_factor(OpKind::kAllToAll,
                                           q.shape.get(Dim::kParticipantCount));
      break;
    case OpKind::kMoeGemm: {
      const double tokens = d(q, Dim::kTokens), hidden = d(q, Dim::kHidden),
                   inter = d(q, Dim::kIntermediate);
      // gate, up and down projections; only experts that receive a token are read
      const double touched = std::min(d(q, Dim::kExperts), tokens);
      c.flops = 2.0 * tokens * hidden * inter * 3.0;
      c.bytes = touched * 3.0 * hidden * inter * b + 2.0 * tokens * hidden * kActivationBytes;
      break;
    }
    case OpKind::kEmbedding:
      c.bytes = 2.0 * d(q, Dim::kTokens) * d(q, Dim::kHidden) * kActivationBytes;
      break;
  }
  return c;
}

double comm_algorithm_factor(OpKind kind, std::int64_t participants) {
  const double n = static_cast<double>(participants);
  switch (kind) {
    case OpKind::kAllReduce:
      return 2.0 * (n - 1.0) / n;
    case OpKind::kAllGather:
    case OpKind::kAllToAll:
      return (n - 1.0) / n;
    case OpKind::kP2P:
      return 1.0;
    default:
      return 0.0;
  }
}

double link_bandwidth(const HardwareSpec& hw, std::int64_t participants) {
  return participants > hw.gpus_per_node ? hw.inter_node_bandwidth : hw.intra_node_bandwidth;
}

double sol_estimate(const OperatorQuery& q, const HardwareSpec& hw) {
  const OperatorCost c = operator_cost(q);
  if (is_collective(q.kind) || q.kind == OpKind::kMoeDispatch ||
      q.kind == OpKind::kMoeCombine) {
    const double t =
        c.wire_bytes / link_bandwidth(hw, q.shape.get(Dim::kParticipantCount)) * kMicros;
    return std::max(t, kMinCommMicros);
  }
  const double memory_time = c.bytes / hw.mem_bandwidth * kMicros;
  if (c.flops == 0) return memory_time;
  const auto rate = hw.compute_rate(q.quant);
  if (!rate) {
    throw ValidationError("no compute rate for " + std::string(to_string(q.quant)) + " on '" +
                          hw.name + "' (" + describe(q) + ")");
  }
  const double compute_time = c.flops / *rate * kMicros;
  return std::max(memory_time, compute_time);
}

}  // namespace llmconf
