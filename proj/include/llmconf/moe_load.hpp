// Copyright (c) 2026 The llmconf Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "llmconf/model.hpp"
#include "llmconf/perfdb.hpp"

namespace llmconf {

struct PowerLawParams {
  double alpha = 1.2;
  double x_min = 1.0;
  double x_max = 100.0;
  std::uint64_t seed = 0;

  friend bool operator==(const PowerLawParams&, const PowerLawParams&) = default;
};

// Throws ValidationError: alpha outside [0, 2] or equal to 1, x_min <= 0,
// x_max <= x_min.
void validate(const PowerLawParams& p);

// Uniform double in [0, 1) from the top 53 bits of one engine draw.
double uniform01(std::mt19937_64& rng);

// Inverse CDF of the bounded power law at u in [0, 1).
double power_law_inverse_cdf(double u, const PowerLawParams& p);

// E draws from the bounded power law, seeded by p.seed.
std::vector<double> sample_weights(int num_experts, const PowerLawParams& p);

struct ExpertLoadProfile {
  std::vector<std::int64_t> tokens_per_expert;  // N_i
  std::int64_t total_tokens = 0;                // T_total
  int topk = 1;                                 // K

  // Largest N_i over T_total * K.
  double top_share() const;

  friend bool operator==(const ExpertLoadProfile&, const ExpertLoadProfile&) = default;
};

// Splits T_total * K token-expert pairs proportionally to `weights` with
// largest-remainder rounding. No expert gets more than T_total (a token
// visits an expert at most once); overflow is redistributed proportionally.
ExpertLoadProfile tokens_per_expert(std::span<const double> weights, std::int64_t total_tokens,
                                    int topk);

// Equal weights for every expert.
ExpertLoadProfile uniform_profile(int num_experts, std::int64_t total_tokens, int topk);

// Dense 0/1 routing matrix, T_total rows by E columns.
class AssignmentMatrix {
 public:
  AssignmentMatrix(std::int64_t rows, std::int64_t cols)
      : rows_(rows), cols_(cols), cells_(static_cast<std::size_t>(rows * cols), 0) {}

  std::int64_t rows() const { return rows_; }
  std::int64_t cols() const { return cols_; }
  bool at(std::int64_t r, std::int64_t c) const { return cells_[index(r, c)] != 0; }
  void set(std::int64_t r, std::int64_t c, bool v) { cells_[index(r, c)] = v ? 1 : 0; }

  std::int64_t row_sum(std::int64_t r) const;
  std::int64_t col_sum(std::int64_t c) const;

 private:
  std::size_t index(std::int64_t r, std::int64_t c) const {
    return static_cast<std::size_t>(r * cols_ + c);
  }
  std::int64_t rows_;
  std::int64_t cols_;
  std::vector<std::uint8_t> cells_;
};

// Routes exactly N_i tokens to expert i with K distinct experts per token.
// Throws InfeasibleError when no such matrix exists.
AssignmentMatrix build_assignment(const ExpertLoadProfile& profile, std::uint64_t seed);

// Token-expert pairs landing on each of `ep` ranks, experts placed in
// contiguous blocks of E/ep.
std::vector<std::int64_t> rank_loads(const ExpertLoadProfile& profile, int ep);

struct MoeBlockLatency {
  double experts_us = 0;   // slowest rank's expert GEMM
  double dispatch_us = 0;
  double combine_us = 0;
  int hot_rank = 0;

  double total_us() const { return experts_us + dispatch_us + combine_us; }
};

// One MoE block (one layer) under `profile`. The profile covers every token
// routed through the expert grid, i.e. step tokens * dp.
MoeBlockLatency moe_block_latency(const PerfDatabase& db, const ModelSpec& model,
                                  const ParallelConfig& cfg, const ExpertLoadProfile& profile);

inline double imbalanced_moe_latency(const PerfDatabase& db, const ModelSpec& model,
                                     const ParallelConfig& cfg, const ExpertLoadProfile& profile) {
  return moe_block_latency(db, model, cfg, profile).total_us();
}

// "expert,rank,tokens,share" rows for plotting a load histogram.
std::string profile_csv(const ExpertLoadProfile& profile, int ep);

}  // namespace llmconf
