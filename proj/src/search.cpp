// Copyright (c) 2026 The llmconf Authors.
// SPDX-License-Identifier: Apache-2.0

#include "llmconf/search.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <numeric>
#include <sstream>
#include <thread>

#include "llmconf/error.hpp"

namespace llmconf {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::vector<ParallelConfig> enumerate(const CandidateSpace& space, const ModelSpec& model,
                                      const HardwareSpec& hw, const WorkloadSpec& w,
                                      bool require_valid_total) {
  const int max_gpus = *std::max_element(w.gpus_valid.begin(), w.gpus_valid.end());
  std::vector<ParallelConfig> out;
  for (int tp : space.tp) {
    for (int pp : space.pp) {
      for (int ep : space.ep) {
        for (int dp : space.dp) {
          ParallelConfig cfg;
          cfg.tp = tp;
          cfg.pp = pp;
          cfg.ep = ep;
          cfg.dp = dp;
          cfg.ctx_capacity = space.ctx_capacity;
          cfg.chunked_prefill = space.chunked_prefill;
          cfg.kv_mem_fraction = space.kv_mem_fraction;
          cfg.cuda_graph = space.cuda_graph;
          cfg.backend = space.backend;
          if (require_valid_total ? !w.gpu_count_valid(cfg.gpus()) : cfg.gpus() > max_gpus) {
            continue;
          }
          if (!is_consistent(model, cfg)) continue;
          for (int b : w.batch_sweep) {
            cfg.batch = b;
            if (fits_memory(model, cfg, w.isl + w.osl, hw)) out.push_back(cfg);
          }
        }
      }
    }
  }
  return out;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

ParetoPoint make_point(PerfEstimate e, const ParallelConfig& cfg, const WorkloadSpec& w) {
  ParetoPoint p;
  p.sla_ok = meets_sla(e, w);
  p.estimate = std::move(e);
  p.config = cfg;
  return p;
}

// Everything computed for one candidate config.
struct CandidateResult {
  std::optional<ParetoPoint> static_point;
  std::optional<ParetoPoint> aggregated_point;
  std::optional<double> ttft;  // static prefill latency, for prefill pools
  std::optional<double> tpot;  // static decode latency, for decode pools
  std::vector<Skip> skipped;
  double elapsed_ms = 0;
};

CandidateResult evaluate_one(const PerfDatabase& db, const ModelSpec& model,
                             const ParallelConfig& cfg, const WorkloadSpec& w,
                             bool want_disagg) {
  const auto start = Clock::now();
  CandidateResult r;
  const bool valid_total = w.gpu_count_valid(cfg.gpus());
  const bool want_static = valid_total && w.has_mode(Mode::kStatic);
  const bool want_aggregated = valid_total && w.has_mode(Mode::kAggregated);
  auto skip = [&](Mode m, const std::exception& e) {
    r.skipped.push_back(Skip{m, describe(cfg), e.what()});
  };

  std::optional<InferenceSession> session;
  try {
    session.emplace(db, model, cfg, estimator_options(w));
  } catch (const Error& e) {
    for (Mode m : w.modes) skip(m, e);
    r.elapsed_ms = ms_since(start);
    return r;
  }

  if (want_static) {
    try {
      PerfEstimate e = estimate_static(*session, w);
      r.ttft = e.ttft;
      r.tpot = e.tpot;
      r.static_point = make_point(std::move(e), cfg, w);
    } catch (const Error& e) {
      skip(Mode::kStatic, e);
    }
  }
  if (want_aggregated) {
    try {
      r.aggregated_point = make_point(estimate_aggregated(*session, w), cfg, w);
    } catch (const Error& e) {
      skip(Mode::kAggregated, e);
    }
  }
  if (want_disagg && !(r.ttft && r.tpot)) {
    try {
      r.ttft = static_ttft(*session, w);
      r.tpot = static_tpot(*session, w, w.constants.stride);
    } catch (const Error& e) {
      r.ttft.reset();
      r.tpot.reset();
      skip(Mode::kDisaggregated, e);
    }
  }
  r.elapsed_ms = ms_since(start);
  return r;
}

std::string fmt_number(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

}  // namespace

bool meets_sla(const PerfEstimate& e, const WorkloadSpec& w) {
  return e.ttft <= w.ttft_bound() && e.speed >= w.speed_floor();
}

std::string describe(const ParallelConfig& cfg) {
  return "tp" + std::to_string(cfg.tp) + " pp" + std::to_string(cfg.pp) + " ep" +
         std::to_string(cfg.ep) + " dp" + std::to_string(cfg.dp) + " batch" +
         std::to_string(cfg.batch);
}

std::vector<ParallelConfig> enumerate_candidates(const CandidateSpace& space,
                                                 const ModelSpec& model,
                                                 const HardwareSpec& hw,
                                                 const WorkloadSpec& w) {
  return enumerate(space, model, hw, w, true);
}

std::vector<ParallelConfig> enumerate_worker_candidates(const CandidateSpace& space,
                                                        const ModelSpec& model,
                                                        const HardwareSpec& hw,
                                                        const WorkloadSpec& w) {
  return enumerate(space, model, hw, w, false);
}

std::size_t space_size(const CandidateSpace& space, const WorkloadSpec& w) {
  return space.tp.size() * space.pp.size() * space.ep.size() * space.dp.size() *
         w.batch_sweep.size();
}

void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, n));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  {
    std::vector<std::jthread> workers;
    workers.reserve(jobs);
    for (unsigned t = 0; t < jobs; ++t) {
      workers.emplace_back([&] {
        for (std::size_t i; !failed && (i = next.fetch_add(1)) < n;) {
          try {
            fn(i);
          } catch (...) {
            if (!failed.exchange(true)) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

Evaluation evaluate_space(const PerfDatabase& db, const ModelSpec& model,
                          std::span<const ParallelConfig> candidates, const WorkloadSpec& w,
                          unsigned jobs) {
  validate(w);
  std::vector<CandidateResult> results(candidates.size());
  parallel_for(candidates.size(), jobs, [&](std::size_t i) {
    results[i] = evaluate_one(db, model, candidates[i], w, false);
  });
  Evaluation out;
  for (auto& r : results) {
    if (r.static_point) out.points.push_back(std::move(*r.static_point));
    if (r.aggregated_point) out.points.push_back(std::move(*r.aggregated_point));
    for (auto& s : r.skipped) out.skipped.push_back(std::move(s));
    out.per_candidate_ms.push_back(r.elapsed_ms);
  }
  return out;
}

std::vector<std::size_t> pareto_indices(std::span<const std::pair<double, double>> points) {
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return points[a].first > points[b].first;
  });
  std::vector<std::size_t> keep;
  double best_faster = -std::numeric_limits<double>::infinity();  // max thru at higher speed
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    double group_max = -std::numeric_limits<double>::infinity();
    while (j < order.size() && points[order[j]].first == points[order[i]].first) {
      group_max = std::max(group_max, points[order[j]].second);
      ++j;
    }
    // A group member survives if nothing faster matches its throughput and
    // nothing equally fast beats it.
    if (group_max > best_faster) {
      for (std::size_t k = i; k < j; ++k) {
        if (points[order[k]].second == group_max) keep.push_back(order[k]);
      }
    }
    best_faster = std::max(best_faster, group_max);
    i = j;
  }
  return keep;
}

std::vector<ParetoPoint> pareto_filter(std::span<const ParetoPoint> points) {
  std::vector<std::pair<double, double>> xy;
  xy.reserve(points.size());
  for (const auto& p : points) xy.emplace_back(p.estimate.speed, p.estimate.throughput_per_gpu);
  std::vector<ParetoPoint> out;
  for (std::size_t i : pareto_indices(xy)) out.push_back(points[i]);
  return out;
}

Selection select_best(std::span<const ParetoPoint> points, const WorkloadSpec& w,
                      std::size_t max_diagnostics) {
  Selection sel;
  for (const auto& p : points) {
    if (meets_sla(p.estimate, w)) sel.ranked.push_back(p);
  }
  std::stable_sort(sel.ranked.begin(), sel.ranked.end(),
                   [](const ParetoPoint& a, const ParetoPoint& b) {
                     const auto& ea = a.estimate;
                     const auto& eb = b.estimate;
                     if (ea.throughput_per_gpu != eb.throughput_per_gpu) {
                       return ea.throughput_per_gpu > eb.throughput_per_gpu;
                     }
                     if (ea.speed != eb.speed) return ea.speed > eb.speed;
                     return ea.gpus < eb.gpus;
                   });
  if (!sel.ranked.empty()) return sel;

  for (const auto& p : points) {
    NearMiss miss;
    miss.point = p;
    const double ttft_over = p.estimate.ttft / w.ttft_bound() - 1.0;
    const double speed_under =
        w.speed_floor() > 0 ? w.speed_floor() / p.estimate.speed - 1.0 : 0.0;
    miss.violation = std::max({ttft_over, speed_under, 0.0});
    if (ttft_over > 0) {
      miss.reason = "ttft " + fmt_number(p.estimate.ttft) + " ms exceeds " +
                    fmt_number(w.ttft_bound()) + " ms";
    }
    if (speed_under > 0) {
      if (!miss.reason.empty()) miss.reason += "; ";
      miss.reason += "speed " + fmt_number(p.estimate.speed) + " tokens/s/user below " +
                     fmt_number(w.speed_floor());
    }
    sel.diagnostics.push_back(std::move(miss));
  }
  std::stable_sort(sel.diagnostics.begin(), sel.diagnostics.end(),
                   [](const NearMiss& a, const NearMiss& b) { return a.violation < b.violation; });
  if (sel.diagnostics.size() > max_diagnostics) sel.diagnostics.resize(max_diagnostics);
  return sel;
}

SearchResult run_search(const PerfDatabase& db, const ModelSpec& model, const WorkloadSpec& w,
                        const SearchOptions& options) {
  const auto start = Clock::now();
  validate(w);
  if (options.candidate_cap > 0 && space_size(w.space, w) > options.candidate_cap) {
    throw CapacityError("search space has " + std::to_string(space_size(w.space, w)) +
                        " candidates; the limit is " + std::to_string(options.candidate_cap));
  }
  SearchResult result;
  result.workload = w;
  result.model = model.name;
  result.hardware = db.hardware().name;
  result.backend = db.backend();

  const bool want_disagg = w.has_mode(Mode::kDisaggregated);
  const std::vector<ParallelConfig> candidates =
      want_disagg ? enumerate_worker_candidates(w.space, model, db.hardware(), w)
                  : enumerate_candidates(w.space, model, db.hardware(), w);

  std::vector<CandidateResult> results(candidates.size());
  parallel_for(candidates.size(), options.jobs, [&](std::size_t i) {
    results[i] = evaluate_one(db, model, candidates[i], w, want_disagg);
  });

  std::vector<double> per_candidate;
  std::vector<DisaggCandidate> prefill;
  std::vector<DisaggCandidate> decode;
  for (std::size_t i = 0; i < results.size(); ++i) {
    auto& r = results[i];
    if (r.static_point) result.points.push_back(std::move(*r.static_point));
    if (r.aggregated_point) result.points.push_back(std::move(*r.aggregated_point));
    for (auto& s : r.skipped) result.skipped.push_back(std::move(s));
    per_candidate.push_back(r.elapsed_ms);
    if (want_disagg && r.ttft && r.tpot && *r.ttft > 0) {
      const ParallelConfig& cfg = candidates[i];
      prefill.push_back({cfg, *r.ttft, prefill_seq_throughput(cfg, *r.ttft), cfg.gpus()});
      decode.push_back({cfg, *r.tpot, decode_seq_throughput(cfg, *r.tpot, w.osl), cfg.gpus()});
    }
  }
  if (want_disagg) {
    const auto plans = disaggregated_plans(prefill, decode, w);
    for (const auto& plan : plans) {
      ParetoPoint p;
      p.estimate = to_estimate(plan, w);
      p.sla_ok = meets_sla(p.estimate, w);
      p.plan = plan;
      result.points.push_back(std::move(p));
    }
    if (plans.empty()) {
      result.skipped.push_back(Skip{Mode::kDisaggregated, "all worker pairs",
                                    "no prefill/decode pairing meets the latency limits on a "
                                    "valid GPU count"});
    }
  }

  for (Mode mode : {Mode::kStatic, Mode::kAggregated, Mode::kDisaggregated}) {
    std::vector<ParetoPoint> eligible;
    for (const auto& p : result.points) {
      if (p.mode() == mode && p.estimate.ttft <= w.ttft_bound()) eligible.push_back(p);
    }
    for (auto& p : pareto_filter(eligible)) result.frontier.push_back(std::move(p));
  }
  result.best = select_best(result.frontier, w);
  if (result.best.ranked.empty()) {
    result.best.diagnostics = select_best(result.points, w).diagnostics;
  }
  result.timing.candidates = candidates.size();
  result.timing.per_candidate_median_ms = median(per_candidate);
  result.timing.total_ms = ms_since(start);
  return result;
}

}  // namespace llmconf
