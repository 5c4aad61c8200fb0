// Copyright (c) 2026 The llmconf Authors.
// SPDX-License-Identifier: Apache-2.0

#include "llmconf/moe_load.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "llmconf/error.hpp"

namespace llmconf {

void validate(const PowerLawParams& p) {
  if (!(p.alpha >= 0.0 && p.alpha <= 2.0)) {
    throw ValidationError("moe_load.alpha must be in [0, 2]");
  }
  if (p.alpha == 1.0) {
    throw ValidationError("moe_load.alpha = 1 is not supported by the inverse transform");
  }
  if (!(p.x_min > 0.0)) throw ValidationError("moe_load.x_min must be > 0");
  if (!(p.x_max > p.x_min)) throw ValidationError("moe_load.x_max must exceed x_min");
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double power_law_inverse_cdf(double u, const PowerLawParams& p) {
  const double e = 1.0 - p.alpha;
  const double lo = std::pow(p.x_min, e);
  const double hi = std::pow(p.x_max, e);
  const double x = std::pow((hi - lo) * u + lo, 1.0 / e);
  // pow round-off can step a hair past the bounds.
  return std::clamp(x, p.x_min, p.x_max);
}

std::vector<double> sample_weights(int num_experts, const PowerLawParams& p) {
  if (num_experts < 1) throw ValidationError("expert count must be >= 1");
  validate(p);
  std::mt19937_64 rng(p.seed);
  std::vector<double> w(static_cast<std::size_t>(num_experts));
  for (auto& x : w) x = power_law_inverse_cdf(uniform01(rng), p);
  return w;
}

double ExpertLoadProfile::top_share() const {
  const double pairs = static_cast<double>(total_tokens) * topk;
  if (tokens_per_expert.empty() || pairs <= 0) return 0.0;
  return static_cast<double>(
             *std::max_element(tokens_per_expert.begin(), tokens_per_expert.end())) /
         pairs;
}

ExpertLoadProfile tokens_per_expert(std::span<const double> weights, std::int64_t total_tokens,
                                    int topk) {
  if (weights.empty()) throw ValidationError("weights must be non-empty");
  if (total_tokens < 1 || topk < 1) throw ValidationError("T_total and K must be >= 1");
  if (static_cast<std::size_t>(topk) > weights.size()) {
    throw ValidationError("K exceeds the expert count");
  }
  for (double w : weights) {
    if (!(w > 0) || !std::isfinite(w)) throw ValidationError("weights must be positive");
  }
  const std::size_t n = weights.size();
  const std::int64_t pairs = total_tokens * topk;
  const double cap = static_cast<double>(total_tokens);

  // Proportional quotas, water-filled so no quota exceeds the cap.
  std::vector<double> quota(n, 0.0);
  std::vector<bool> capped(n, false);
  double remaining = static_cast<double>(pairs);
  for (bool changed = true; changed;) {
    changed = false;
    double free_weight = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!capped[i]) free_weight += weights[i];
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (capped[i]) continue;
      quota[i] = weights[i] / free_weight * remaining;
      if (quota[i] > cap) {
        capped[i] = true;
        quota[i] = cap;
        remaining -= cap;
        changed = true;
      }
    }
  }

  ExpertLoadProfile profile;
  profile.total_tokens = total_tokens;
  profile.topk = topk;
  profile.tokens_per_expert.resize(n);
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto floor_q = static_cast<std::int64_t>(std::floor(quota[i]));
    profile.tokens_per_expert[i] = std::min<std::int64_t>(floor_q, total_tokens);
    assigned += profile.tokens_per_expert[i];
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return quota[a] - static_cast<double>(profile.tokens_per_expert[a]) >
           quota[b] - static_cast<double>(profile.tokens_per_expert[b]);
  });
  // Largest remainders first; loop again if float drift left a residual.
  while (assigned < pairs) {
    bool progressed = false;
    for (std::size_t i : order) {
      if (assigned == pairs) break;
      if (profile.tokens_per_expert[i] >= total_tokens) continue;
      ++profile.tokens_per_expert[i];
      ++assigned;
      progressed = true;
    }
    if (!progressed) break;
  }
  while (assigned > pairs) {
    for (auto it = order.rbegin(); it != order.rend() && assigned > pairs; ++it) {
      if (profile.tokens_per_expert[*it] > 0) {
        --profile.tokens_per_expert[*it];
        --assigned;
      }
    }
  }
  return profile;
}

ExpertLoadProfile uniform_profile(int num_experts, std::int64_t total_tokens, int topk) {
  const std::vector<double> w(static_cast<std::size_t>(std::max(num_experts, 0)), 1.0);
  return tokens_per_expert(w, total_tokens, topk);
}

std::int64_t AssignmentMatrix::row_sum(std::int64_t r) const {
  std::int64_t s = 0;
  for (std::int64_t c = 0; c < cols_; ++c) s += cells_[index(r, c)];
  return s;
}

std::int64_t AssignmentMatrix::col_sum(std::int64_t c) const {
  std::int64_t s = 0;
  for (std::int64_t r = 0; r < rows_; ++r) s += cells_[index(r, c)];
  return s;
}

AssignmentMatrix build_assignment(const ExpertLoadProfile& profile, std::uint64_t seed) {
  const std::int64_t rows = profile.total_tokens;
  const auto cols = static_cast<std::int64_t>(profile.tokens_per_expert.size());
  if (rows < 1 || cols < 1 || profile.topk < 1) {
    throw InfeasibleError("assignment needs T_total, E and K >= 1");
  }
  if (profile.topk > cols) throw InfeasibleError("K exceeds the expert count");
  std::int64_t sum = 0;
  for (std::int64_t c = 0; c < cols; ++c) {
    const std::int64_t n = profile.tokens_per_expert[static_cast<std::size_t>(c)];
    if (n < 0 || n > rows) {
      throw InfeasibleError("expert " + std::to_string(c) + " load " + std::to_string(n) +
                            " outside [0, T_total]");
    }
    sum += n;
  }
  if (sum != rows * profile.topk) {
    throw InfeasibleError("expert loads sum to " + std::to_string(sum) + ", expected " +
                          std::to_string(rows * profile.topk));
  }

  // Token slots are filled expert by expert, wrapping around the token list.
  // N_i <= T_total keeps each expert's tokens distinct and the running total
  // gives every token exactly K experts.
  std::vector<std::int64_t> perm(static_cast<std::size_t>(rows));
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(seed);
  for (std::int64_t i = rows - 1; i > 0; --i) {
    const auto j = static_cast<std::int64_t>(uniform01(rng) * static_cast<double>(i + 1));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }
  AssignmentMatrix m(rows, cols);
  std::int64_t slot = 0;
  for (std::int64_t c = 0; c < cols; ++c) {
    for (std::int64_t k = 0; k < profile.tokens_per_expert[static_cast<std::size_t>(c)]; ++k) {
      m.set(perm[static_cast<std::size_t>(slot % rows)], c, true);
      ++slot;
    }
  }
  return m;
}

std::vector<std::int64_t> rank_loads(const ExpertLoadProfile& profile, int ep) {
  const auto experts = static_cast<int>(profile.tokens_per_expert.size());
  if (ep < 1 || experts % ep != 0) {
    throw ConfigError("ep=" + std::to_string(ep) + " does not divide " +
                      std::to_string(experts) + " experts");
  }
  const int block = experts / ep;
  std::vector<std::int64_t> loads(static_cast<std::size_t>(ep), 0);
  for (int i = 0; i < experts; ++i) {
    loads[static_cast<std::size_t>(i / block)] += profile.tokens_per_expert[static_cast<std::size_t>(i)];
  }
  return loads;
}

MoeBlockLatency moe_block_latency(const PerfDatabase& db, const ModelSpec& model,
                                  const ParallelConfig& cfg, const ExpertLoadProfile& profile) {
  if (!model.moe) throw ConfigError("model '" + model.name + "' has no MoE block");
  if (static_cast<int>(profile.tokens_per_expert.size()) != model.moe->num_experts ||
      profile.topk != model.moe->topk) {
    throw ConfigError("load profile does not match the expert layout of '" + model.name + "'");
  }
  MoeBlockLatency out;
  const auto loads = rank_loads(profile, cfg.ep);
  for (std::size_t r = 0; r < loads.size(); ++r) {
    if (loads[r] == 0) continue;
    const double t = db.query_latency(moe_expert_query(model, cfg, loads[r]));
    if (t > out.experts_us) {
      out.experts_us = t;
      out.hot_rank = static_cast<int>(r);
    }
  }
  if (cfg.ep > 1) {
    const std::int64_t step_tokens = (profile.total_tokens + cfg.dp - 1) / cfg.dp;
    out.dispatch_us =
        db.query_latency(moe_comm_query(model, cfg, OpKind::kMoeDispatch, step_tokens));
    out.combine_us =
        db.query_latency(moe_comm_query(model, cfg, OpKind::kMoeCombine, step_tokens));
  }
  return out;
}

std::string profile_csv(const ExpertLoadProfile& profile, int ep) {
  const auto experts = static_cast<int>(profile.tokens_per_expert.size());
  if (ep < 1 || experts % ep != 0) throw ConfigError("ep must divide the expert count");
  const int block = experts / ep;
  const double pairs = static_cast<double>(profile.total_tokens) * profile.topk;
  std::ostringstream os;
  os << "expert,rank,tokens,share\n";
  for (int i = 0; i < experts; ++i) {
    const auto n = profile.tokens_per_expert[static_cast<std::size_t>(i)];
    os << i << ',' << i / block << ',' << n << ',' << static_cast<double>(n) / pairs << '\n';
  }
  return os.str();
}

}  // namespace llmconf
