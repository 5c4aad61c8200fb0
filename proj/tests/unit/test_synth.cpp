// Copyright (c) 2026 The llmconf Authors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include <nlohmann/json.hpp>

#include "llmconf/roofline.hpp"
#include "llmconf/synth.hpp"
#include "support/fixtures.hpp"

using namespace llmconf;

TEST_SUITE("synth") {
  TEST_CASE("same seed gives identical records") {
    const std::vector<ModelSpec> models{testing::qwen_small()};
    const auto spec = derive_grid_spec(models, testing::default_configs());
    const auto a = synthesize(testing::h100(), spec, 11);
    const auto b = synthesize(testing::h100(), spec, 11);
    const auto c = synthesize(testing::h100(), spec, 12);
    CHECK(a.records == b.records);
    CHECK_FALSE(a.records == c.records);
  }

  TEST_CASE("latency is sol times an efficiency inside the band") {
    const std::vector<ModelSpec> models{testing::qwen_moe()};
    const auto spec = derive_grid_spec(models, testing::default_configs());
    const auto hw = testing::h100();
    SynthOptions opts;
    opts.amplitude = 0.5;
    const auto db = synthesize(hw, spec, 3, opts);
    REQUIRE_FALSE(db.records.empty());
    for (const auto& r : db.records) {
      CHECK(r.provenance == Provenance::kSynthetic);
      const double eff = r.latency_us / sol_estimate(r.query, hw);
      CHECK(eff >= 1.5 - 1e-9);
      CHECK(eff <= 2.5 + 1e-9);
    }
  }

  TEST_CASE("efficiency moves less than 10% between neighbouring grid points") {
    const std::vector<ModelSpec> models{testing::qwen_moe(), testing::mla_moe()};
    const auto spec = derive_grid_spec(models, testing::default_configs());
    for (const auto& entry : spec.entries) {
      const auto dims = interpolated_dims(entry.base.kind);
      for (Dim d : dims) {
        OperatorQuery q = entry.base;
        for (Dim other : dims) {
          const auto& ax = spec.axis(entry, other);
          q.shape.set(other, ax[ax.size() / 2]);
        }
        const auto& axis = spec.axis(entry, d);
        for (std::size_t i = 1; i < axis.size(); ++i) {
          OperatorQuery a = q, b = q;
          a.shape.set(d, axis[i - 1]);
          b.shape.set(d, axis[i]);
          const double ea = synthetic_efficiency(spec, entry, a, 7, 0.8);
          const double eb = synthetic_efficiency(spec, entry, b, 7, 0.8);
          CHECK(std::abs(eb / ea - 1.0) < 0.10);
        }
      }
    }
  }

  TEST_CASE("constant latency") {
    const auto db = testing::synthetic_db({testing::qwen_small()}, 1, 250.0);
    for (const auto& r : db.records()) CHECK(r.latency_us == 250.0);
  }

  TEST_CASE("derived grid covers every decomposed operator") {
    const std::vector<ModelSpec> models{testing::qwen_small(), testing::qwen_moe(),
                                        testing::mla_moe()};
    const auto db = testing::synthetic_db(models);
    std::size_t plans = 0;
    for (const auto& m : models) {
      for (auto cfg : testing::default_configs()) {
        if (!is_consistent(m, cfg)) continue;
        for (const auto& shape : {StepShape::prefill(2, 512), StepShape::decode(8, 700),
                                  StepShape::mixed(2048, 1024, 6, 1100)}) {
          for (const auto& e : decompose(m, cfg, shape).entries) {
            CHECK_MESSAGE(db.has_grid(e.query), describe(e.query));
          }
          ++plans;
        }
      }
    }
    CHECK(plans > 100);
  }

  TEST_CASE("grid spec json round trip") {
    const std::vector<ModelSpec> models{testing::qwen_small()};
    const auto spec = derive_grid_spec(models, testing::default_configs());
    const auto back = grid_spec_from_json(to_json(spec));
    CHECK(to_json(back) == to_json(spec));
    GridSpec bad = spec;
    bad.axes[Dim::kM] = {4, 2};
    CHECK_THROWS(validate(bad));
  }
}
