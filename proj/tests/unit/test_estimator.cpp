// Copyright (c) 2026 The llmconf Authors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "llmconf/error.hpp"
#include "llmconf/estimator.hpp"
#include "support/fixtures.hpp"

using namespace llmconf;

namespace {

ParallelConfig cfg(int tp, int pp = 1, int ep = 1, int dp = 1, int batch = 1) {
  ParallelConfig c;
  c.tp = tp;
  c.pp = pp;
  c.ep = ep;
  c.dp = dp;
  c.batch = batch;
  return c;
}

const PerfDatabase& smooth_db() {
  static const PerfDatabase db =
      testing::synthetic_db({testing::qwen_small(), testing::qwen_moe()});
  return db;
}

// Latency grows with every coordinate: efficiency pinned at 2.
const PerfDatabase& monotone_db() {
  static const PerfDatabase db =
      testing::synthetic_db({testing::qwen_small(), testing::qwen_moe()}, 7, std::nullopt, 0.0);
  return db;
}

}  // namespace

TEST_SUITE("estimator") {
  TEST_CASE("constant database sums repeat counts") {
    const auto db = testing::synthetic_db({testing::qwen_small()}, 1, 250.0);
    const auto m = testing::qwen_small();
    const InferenceSession s(db, m, cfg(1));
    const auto step = s.get_step_latency(4, 512, Phase::kPrefill);
    // embedding + 5 per-layer ops + lm_head
    const int ops = 1 + 5 * m.num_layers + 1;
    CHECK(step.total == doctest::Approx(ops * 0.25));
    CHECK(step.breakdown_sum() == doctest::Approx(step.total));
    double by_label = 0;
    for (const auto& [_, ms] : step.ops) by_label += ms;
    CHECK(by_label == doctest::Approx(step.total));
  }

  TEST_CASE("pipeline bubble factor") {
    const auto db = testing::synthetic_db({testing::qwen_small()}, 1, 250.0);
    const auto m = testing::qwen_small();
    const InferenceSession s(db, m, cfg(1, 2));
    const auto step = s.get_step_latency(4, 700, Phase::kDecode);
    CHECK(step.pp_factor == doctest::Approx((4.0 + 1.0) / 4.0));
    EstimatorOptions off;
    off.pp_bubble = false;
    const InferenceSession plain(db, m, cfg(1, 2), off);
    CHECK(step.total == doctest::Approx(plain.get_step_latency(4, 700, Phase::kDecode).total *
                                        1.25));
  }

  TEST_CASE("doubling layers doubles per-layer work only") {
    auto m = testing::qwen_small();
    auto m2 = m;
    m2.num_layers *= 2;
    const auto db = monotone_db();
    const InferenceSession a(db, m, cfg(2));
    const InferenceSession b(db, m2, cfg(2));
    const auto sa = a.get_step_latency(2, 256, Phase::kPrefill);
    const auto sb = b.get_step_latency(2, 256, Phase::kPrefill);
    for (std::size_t i = 0; i < sa.ops.size(); ++i) {
      const auto& [label, ms] = sa.ops[i];
      const double factor = (label == "embedding" || label == "lm_head") ? 1.0 : 2.0;
      CHECK_MESSAGE(sb.ops[i].second == doctest::Approx(ms * factor), label);
    }
  }

  TEST_CASE("decode latency is non-decreasing in sequence length") {
    const auto& db = monotone_db();
    const InferenceSession s(db, testing::qwen_small(), cfg(2, 1, 1, 1, 16));
    double prev = 0;
    for (std::int64_t seq = 64; seq <= 16384; seq += 97) {
      const double t = s.get_step_latency(16, seq, Phase::kDecode).total;
      CHECK(t >= prev - 1e-12);
      prev = t;
    }
  }

  TEST_CASE("mixed step dominates its components and grows with n_gen") {
    const auto& db = monotone_db();
    for (const auto& m : {testing::qwen_small(), testing::qwen_moe()}) {
      EstimatorOptions o;
      o.moe_imbalance = false;
      const InferenceSession s(db, m, cfg(2, 1, 1, 1, 32), o);
      const std::int64_t isl = 1024, osl = 128;
      const double ctx_only = s.step(StepShape::mixed(2048, isl, 0, 0)).total;
      double prev = 0;
      for (std::int64_t g = 1; g <= 64; g *= 2) {
        const double mix = s.get_mix_latency(2048, g, isl, osl).total;
        const double gen_only = s.get_gen_latency(g, isl, osl).total;
        CHECK(mix >= std::max(ctx_only, gen_only) - 1e-12);
        CHECK(mix >= prev - 1e-12);
        prev = mix;
      }
    }
  }

  TEST_CASE("moe imbalance never speeds up a step") {
    const auto& db = smooth_db();
    const auto m = testing::qwen_moe();
    EstimatorOptions even;
    even.moe_imbalance = false;
    const auto c = cfg(1, 1, 4, 4, 8);
    const InferenceSession skewed(db, m, c);
    const InferenceSession balanced(db, m, c, even);
    for (std::int64_t b : {1, 8, 64}) {
      CHECK(skewed.get_step_latency(b, 1024, Phase::kPrefill).breakdown.at(OpKind::kMoeGemm) >=
            balanced.get_step_latency(b, 1024, Phase::kPrefill).breakdown.at(OpKind::kMoeGemm) *
                (1 - 1e-9));
    }
  }

  TEST_CASE("bad arguments") {
    const InferenceSession s(smooth_db(), testing::qwen_small(), cfg(1));
    CHECK_THROWS_AS(s.get_step_latency(0, 10, Phase::kPrefill), ValidationError);
    CHECK_THROWS_AS(s.get_step_latency(1, 10, Phase::kMixed), ValidationError);
    CHECK_THROWS_AS(s.get_mix_latency(0, 0, 10, 10), ValidationError);
    CHECK_THROWS_AS(InferenceSession(smooth_db(), testing::qwen_small(), cfg(3)), ConfigError);
  }
}
