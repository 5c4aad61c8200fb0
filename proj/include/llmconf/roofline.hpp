// Copyright (c) 2026 The llmconf Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "llmconf/hardware.hpp"
#include "llmconf/operator.hpp"

namespace llmconf {

// Work an operator performs, as seen by the roofline.
struct OperatorCost {
  double flops = 0;        // arithmetic work
  double bytes = 0;        // HBM traffic for compute ops
  double wire_bytes = 0;   // bytes on the interconnect for communication ops
};

OperatorCost operator_cost(const OperatorQuery& q);

// Ring-collective traffic multiplier applied to message_bytes:
// allreduce 2(n-1)/n, allgather and alltoall (n-1)/n, p2p 1.
double comm_algorithm_factor(OpKind kind, std::int64_t participants);

// Link bandwidth used by a collective over `participants` GPUs: intra-node
// links while the group fits in one node, the inter-node fabric otherwise.
double link_bandwidth(const HardwareSpec& hw, std::int64_t participants);

// Speed-of-light latency in microseconds: max(bytes / mem_bw, flops / peak)
// for compute ops, wire_bytes / link_bw for communication ops. Always > 0.
// Throws ValidationError when hw has no compute rate for q.quant.
double sol_estimate(const OperatorQuery& q, const HardwareSpec& hw);

}  // namespace llmconf
