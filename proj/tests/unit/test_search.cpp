// Copyright (c) 2026 The llmconf Authors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <random>
#include <stdexcept>

#include "llmconf/error.hpp"
#include "llmconf/report.hpp"
#include "llmconf/search.hpp"
#include "support/fixtures.hpp"

using namespace llmconf;

namespace {

const PerfDatabase& bundled() {
  static const PerfDatabase db = load_db(testing::bundled_db_path());
  return db;
}

WorkloadSpec chat() { return load_workload(testing::data_dir() / "workloads" / "chat.yaml"); }

// Quadratic dominance filter, output sorted by descending speed, stable.
std::vector<std::size_t> pareto_oracle(const std::vector<std::pair<double, double>>& pts) {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < pts.size() && !dominated; ++j) {
      dominated = pts[j].first >= pts[i].first && pts[j].second >= pts[i].second &&
                  (pts[j].first > pts[i].first || pts[j].second > pts[i].second);
    }
    if (!dominated) keep.push_back(i);
  }
  std::stable_sort(keep.begin(), keep.end(),
                   [&](std::size_t a, std::size_t b) { return pts[a].first > pts[b].first; });
  return keep;
}

ParetoPoint point(double speed, double thru, int gpus = 8, double ttft = 100.0) {
  ParetoPoint p;
  p.estimate.mode = Mode::kAggregated;
  p.estimate.speed = speed;
  p.estimate.tpot = 1000.0 / speed;
  p.estimate.throughput_per_gpu = thru;
  p.estimate.gpus = gpus;
  p.estimate.ttft = ttft;
  return p;
}

}  // namespace

TEST_SUITE("search") {
  TEST_CASE("pareto matches the quadratic oracle") {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 500; ++trial) {
      const int n = 1 + static_cast<int>(rng() % 40);
      std::vector<std::pair<double, double>> pts;
      for (int i = 0; i < n; ++i) {
        // Small value ranges force ties and duplicates.
        pts.emplace_back(static_cast<double>(rng() % 8), static_cast<double>(rng() % 8));
      }
      CHECK(pareto_indices(pts) == pareto_oracle(pts));
    }
  }

  TEST_CASE("pareto keeps duplicates and orders by speed") {
    const std::vector<std::pair<double, double>> pts{{1, 5}, {3, 2}, {1, 5}, {2, 1}, {3, 2}};
    CHECK(pareto_indices(pts) == std::vector<std::size_t>{1, 4, 0, 2});
  }

  TEST_CASE("select_best ranks by throughput, speed, then gpus") {
    WorkloadSpec w;
    w.ttft_limit = 500;
    w.min_speed = 10;
    const std::vector<ParetoPoint> pts{point(20, 100, 8), point(30, 100, 8), point(30, 100, 4),
                                       point(5, 900), point(50, 200, 8, 900)};
    const auto sel = select_best(pts, w);
    REQUIRE(sel.ranked.size() == 3);
    CHECK(sel.ranked[0].estimate.gpus == 4);
    CHECK(sel.ranked[1].estimate.speed == 30);
    CHECK(sel.ranked[2].estimate.speed == 20);
    CHECK(sel.diagnostics.empty());
  }

  TEST_CASE("select_best reports the nearest misses") {
    WorkloadSpec w;
    w.ttft_limit = 100;
    w.min_speed = 100;
    const std::vector<ParetoPoint> pts{point(50, 1), point(90, 1), point(99, 1, 8, 150)};
    const auto sel = select_best(pts, w, 2);
    CHECK(sel.ranked.empty());
    REQUIRE(sel.diagnostics.size() == 2);
    CHECK(sel.diagnostics[0].violation == doctest::Approx(100.0 / 90 - 1));
    CHECK(sel.diagnostics[1].violation == doctest::Approx(0.5));
    CHECK_FALSE(sel.diagnostics[0].reason.empty());
  }

  TEST_CASE("candidate enumeration matches a brute-force count") {
    const auto m = testing::qwen_moe();
    const auto hw = testing::h100();
    const auto w = chat();
    std::size_t expect = 0;
    for (int tp : w.space.tp)
      for (int pp : w.space.pp)
        for (int ep : w.space.ep)
          for (int dp : w.space.dp)
            for (int b : w.batch_sweep) {
              ParallelConfig c;
              c.tp = tp;
              c.pp = pp;
              c.ep = ep;
              c.dp = dp;
              c.batch = b;
              c.ctx_capacity = w.space.ctx_capacity;
              const int g = c.gpus();
              if (std::find(w.gpus_valid.begin(), w.gpus_valid.end(), g) == w.gpus_valid.end())
                continue;
              if (is_consistent(m, c) && fits_memory(m, c, w.isl + w.osl, hw)) ++expect;
            }
    CHECK(enumerate_candidates(w.space, m, hw, w).size() == expect);
    CHECK(enumerate_worker_candidates(w.space, m, hw, w).size() >= expect);
    CHECK(space_size(w.space, w) == 4 * 3 * 4 * 4 * 10);
  }

  TEST_CASE("evaluation does not depend on candidate order") {
    const auto m = testing::qwen_small();
    auto w = chat();
    w.modes = {Mode::kStatic, Mode::kAggregated};
    auto cands = enumerate_candidates(w.space, m, bundled().hardware(), w);
    const auto a = evaluate_space(bundled(), m, cands, w, 1);
    std::reverse(cands.begin(), cands.end());
    const auto b = evaluate_space(bundled(), m, cands, w, 3);
    REQUIRE(a.points.size() == b.points.size());
    auto key = [](const ParetoPoint& p) {
      return to_json(p).dump();
    };
    std::vector<std::string> ka, kb;
    for (const auto& p : a.points) ka.push_back(key(p));
    for (const auto& p : b.points) kb.push_back(key(p));
    std::sort(ka.begin(), ka.end());
    std::sort(kb.begin(), kb.end());
    CHECK(ka == kb);
  }

  TEST_CASE("parallel_for visits every index and rethrows") {
    std::vector<std::atomic<int>> hits(1000);
    parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i]++; });
    CHECK(std::all_of(hits.begin(), hits.end(), [](const auto& h) { return h.load() == 1; }));
    CHECK_THROWS_AS(parallel_for(10, 4,
                                 [](std::size_t i) {
                                   if (i == 7) throw std::runtime_error("boom");
                                 }),
                    std::runtime_error);
  }

  TEST_CASE("fixture search produces a frontier and a winner") {
    const auto r = run_search(bundled(), testing::qwen_small(), chat(), {.jobs = 2});
    CHECK_FALSE(r.frontier.empty());
    REQUIRE_FALSE(r.best.ranked.empty());
    const auto& best = r.best.ranked.front();
    CHECK(meets_sla(best.estimate, r.workload));
    for (const auto& p : r.frontier) {
      CHECK(p.estimate.ttft <= r.workload.ttft_bound());
      if (meets_sla(p.estimate, r.workload)) {
        CHECK(p.estimate.throughput_per_gpu <= best.estimate.throughput_per_gpu);
      }
    }
    bool has_disagg = false;
    for (const auto& p : r.points) has_disagg = has_disagg || p.plan.has_value();
    CHECK(has_disagg);
  }

  TEST_CASE("raising the speed floor never raises the winning throughput") {
    const auto m = testing::qwen_moe();
    double prev = std::numeric_limits<double>::infinity();
    for (double floor : {0.0, 10.0, 20.0, 40.0, 60.0, 80.0, 120.0}) {
      auto w = chat();
      if (floor > 0) w.min_speed = floor; else w.min_speed.reset();
      const auto r = run_search(bundled(), m, w, {.jobs = 2});
      const double thru =
          r.best.ranked.empty() ? 0.0 : r.best.ranked.front().estimate.throughput_per_gpu;
      CHECK(thru <= prev);
      prev = thru;
    }
  }

  TEST_CASE("unsatisfiable limits leave diagnostics") {
    auto w = chat();
    w.ttft_limit = 0.001;
    const auto r = run_search(bundled(), testing::qwen_small(), w, {.jobs = 2});
    CHECK(r.best.ranked.empty());
    CHECK_FALSE(r.best.diagnostics.empty());
  }

  TEST_CASE("candidate cap") {
    CHECK_THROWS_AS(run_search(bundled(), testing::qwen_small(), chat(), {.candidate_cap = 10}),
                    CapacityError);
  }
}
