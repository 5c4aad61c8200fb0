// Copyright (c) 2026 The llmconf Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "llmconf/types.hpp"

namespace llmconf {

// Named integer dimensions of one operator invocation. A zero entry means the
// dimension is absent; present dimensions are always >= 1.
class Shape {
 public:
  Shape() = default;

  std::int64_t get(Dim d) const { return dims_[static_cast<std::size_t>(d)]; }
  bool has(Dim d) const { return get(d) != 0; }
  Shape& set(Dim d, std::int64_t v) {
    dims_[static_cast<std::size_t>(d)] = v;
    return *this;
  }

  const std::optional<AttnKind>& attn() const { return attn_; }
  Shape& set_attn(AttnKind a) {
    attn_ = a;
    return *this;
  }

  const std::array<std::int64_t, kDimCount>& dims() const { return dims_; }

  friend bool operator==(const Shape&, const Shape&) = default;

 private:
  std::array<std::int64_t, kDimCount> dims_{};
  std::optional<AttnKind> attn_;
};

struct OperatorQuery {
  OpKind kind = OpKind::kGemm;
  Shape shape;
  Quant quant = Quant::kFp16;
  std::string backend;

  friend bool operator==(const OperatorQuery&, const OperatorQuery&) = default;
};

// Dimensions every query of `kind` must carry (and no others).
std::span<const Dim> required_dims(OpKind kind);

// Dimensions interpolated over inside a grid; the rest of the required dims
// (minus derived ones) are exact-match keys.
//   gemm: m   attention: batch, seq_len   comm: message_bytes   moe/embedding: tokens
std::span<const Dim> interpolated_dims(OpKind kind);

// Dimensions carried for the roofline but excluded from grid keys and
// interpolation (attention kv_len).
bool is_derived_dim(OpKind kind, Dim d);

// Throws ValidationError describing the first violated invariant.
void validate_query(const OperatorQuery& q);

// Short human-readable rendering, e.g. "gemm/fp8{m=64,n=8192,k=8192}".
std::string describe(const OperatorQuery& q);

}  // namespace llmconf
