// Copyright (c) 2026 The llmconf Authors.
// SPDX-License-Identifier: Apache-2.0

#include "llmconf/serving.hpp"

#include <algorithm>
#include <limits>
#include <tuple>
#include <utility>

#include "llmconf/error.hpp"

namespace llmconf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

void require_fit(const InferenceSession& s, const WorkloadSpec& w) {
  if (!fits_memory(s.model(), s.config(), w.isl + w.osl, s.db().hardware())) {
    const auto& c = s.config();
    throw InfeasibleError("tp=" + std::to_string(c.tp) + " pp=" + std::to_string(c.pp) +
                          " ep=" + std::to_string(c.ep) + " dp=" + std::to_string(c.dp) +
                          " batch=" + std::to_string(c.batch) + " exceeds GPU memory");
  }
}

void fill_metrics(PerfEstimate& e, std::int64_t osl) {
  const Metrics m = derive_metrics(e.ttft, e.tpot, osl, e.batch, e.gpus);
  e.speed = m.speed;
  e.throughput_per_gpu = m.throughput_per_gpu;
}

}  // namespace

Metrics derive_metrics(double ttft_ms, double tpot_ms, std::int64_t osl, std::int64_t batch,
                       int total_gpus) {
  if (tpot_ms < 0 || total_gpus < 1 || osl < 1) {
    throw ValidationError("derive_metrics needs tpot >= 0, osl >= 1 and gpus >= 1");
  }
  Metrics m;
  m.speed = tpot_ms > 0 ? 1000.0 / tpot_ms : kInf;
  m.throughput_per_gpu = 1000.0 / (ttft_ms + static_cast<double>(osl - 1) * tpot_ms) *
                         static_cast<double>(batch) * static_cast<double>(osl) /
                         static_cast<double>(total_gpus);
  return m;
}

EstimatorOptions estimator_options(const WorkloadSpec& w) {
  EstimatorOptions o;
  o.moe_load = w.moe_load;
  return o;
}

// ---------------------------------------------------------------------------
// Static

double static_ttft(const InferenceSession& s, const WorkloadSpec& w) {
  return s.get_step_latency(s.config().batch, w.isl - w.prefix, Phase::kPrefill).total;
}

double static_tpot(const InferenceSession& s, const WorkloadSpec& w, int stride) {
  if (w.osl <= 1) return 0.0;
  if (stride < 1) throw ValidationError("stride must be >= 1");
  // Extended precision keeps t * r and the running sum exact for equal steps.
  long double t_gen = 0;
  for (std::int64_t k = 0; k < w.osl - 1; k += stride) {
    const double t_step =
        s.get_step_latency(s.config().batch, w.isl + k + 1, Phase::kDecode).total;
    const std::int64_t r = std::min<std::int64_t>(stride, w.osl - 1 - k);
    t_gen += static_cast<long double>(t_step) * static_cast<long double>(r);
  }
  return static_cast<double>(t_gen / static_cast<long double>(w.osl - 1));
}

PerfEstimate estimate_static(const InferenceSession& s, const WorkloadSpec& w) {
  validate(w);
  require_fit(s, w);
  PerfEstimate e;
  e.mode = Mode::kStatic;
  e.ttft = static_ttft(s, w);
  e.tpot = static_tpot(s, w, w.constants.stride);
  e.batch = static_cast<std::int64_t>(s.config().batch) * s.config().dp;
  e.gpus = s.config().gpus();
  fill_metrics(e, w.osl);
  e.breakdown = {{"prefill_ms", e.ttft},
                 {"decode_steps", static_cast<double>(w.osl - 1)},
                 {"decode_queries", static_cast<double>(
                                        w.osl > 1 ? ceil_div(w.osl - 1, w.constants.stride) : 0)},
                 {"generation_ms", e.tpot * static_cast<double>(w.osl - 1)}};
  return e;
}

PerfEstimate estimate_static(const PerfDatabase& db, const ModelSpec& model,
                             const ParallelConfig& cfg, const WorkloadSpec& w) {
  return estimate_static(InferenceSession(db, model, cfg, estimator_options(w)), w);
}

// ---------------------------------------------------------------------------
// Aggregated

AggregatedSchedule aggregated_schedule(std::int64_t batch, std::int64_t isl, std::int64_t osl,
                                       std::int64_t ctx_capacity) {
  if (batch < 1 || isl < 1 || osl < 1 || ctx_capacity < 1) {
    throw ValidationError("aggregated schedule needs B, ISL, OSL and C_ctx >= 1");
  }
  AggregatedSchedule s;
  s.total_ctx_steps = ceil_div(isl * batch, ctx_capacity);
  s.mix_ctx_tokens = ctx_capacity;
  if (batch == 1) {
    s.mix_steps = 1;
    s.gen_steps = osl - 1;
    s.mix_gen_tokens = 0;
    return s;
  }
  s.mix_steps = s.total_ctx_steps;
  if (s.total_ctx_steps >= osl) {
    s.context_dominant = true;
    s.gen_steps = 0;
    // floor(B / (T_total_ctx / OSL)) in exact integer arithmetic
    s.mix_gen_tokens = std::max<std::int64_t>(1, batch * osl / s.total_ctx_steps);
  } else {
    s.gen_steps = osl - s.mix_steps;
    s.mix_gen_tokens = batch - ceil_div(ctx_capacity, isl);
    if (s.mix_gen_tokens < 1) {
      throw InfeasibleError("aggregated: batch " + std::to_string(batch) +
                            " leaves no generation slot beside " +
                            std::to_string(ceil_div(ctx_capacity, isl)) + " context requests");
    }
  }
  return s;
}

double ttft_correction(std::int64_t total_ctx_steps, const ServingConstants& c) {
  const double f =
      c.f_corr_base + (static_cast<double>(total_ctx_steps) - c.f_corr_offset) / c.f_corr_slope;
  return std::clamp(f, c.f_corr_base, c.f_corr_cap);
}

PerfEstimate estimate_aggregated(const InferenceSession& s, const WorkloadSpec& w) {
  validate(w);
  require_fit(s, w);
  const ParallelConfig& cfg = s.config();
  const std::int64_t b = cfg.batch;
  const std::int64_t c_ctx = cfg.effective_ctx_capacity(w.isl);
  const AggregatedSchedule sched = aggregated_schedule(b, w.isl, w.osl, c_ctx);

  const double l_mix =
      s.get_mix_latency(sched.mix_ctx_tokens, sched.mix_gen_tokens, w.isl, w.osl).total;
  const double l_gen = s.get_gen_latency(b, w.isl, w.osl).total;
  const double f_corr = ttft_correction(sched.total_ctx_steps, w.constants);

  PerfEstimate e;
  e.mode = Mode::kAggregated;
  e.ttft = l_mix * static_cast<double>(ceil_div(w.isl, c_ctx)) * f_corr;
  const auto t_mix = static_cast<double>(
      std::max<std::int64_t>(1, sched.mix_steps - w.constants.mix_warmup_steps));
  const auto t_gen = static_cast<double>(sched.gen_steps);
  e.tpot = b > 1 ? (l_mix * t_mix + l_gen * t_gen) / (t_mix + t_gen) : l_gen;
  e.batch = b * cfg.dp;
  e.gpus = cfg.gpus();
  fill_metrics(e, w.osl);
  e.breakdown = {{"total_ctx_steps", static_cast<double>(sched.total_ctx_steps)},
                 {"context_dominant", sched.context_dominant ? 1.0 : 0.0},
                 {"mix_steps", static_cast<double>(sched.mix_steps)},
                 {"gen_steps", static_cast<double>(sched.gen_steps)},
                 {"mix_ctx_tokens", static_cast<double>(sched.mix_ctx_tokens)},
                 {"mix_gen_tokens", static_cast<double>(sched.mix_gen_tokens)},
                 {"mix_ms", l_mix},
                 {"gen_ms", l_gen},
                 {"f_corr", f_corr}};
  return e;
}

PerfEstimate estimate_aggregated(const PerfDatabase& db, const ModelSpec& model,
                                 const ParallelConfig& cfg, const WorkloadSpec& w) {
  return estimate_aggregated(InferenceSession(db, model, cfg, estimator_options(w)), w);
}

// ---------------------------------------------------------------------------
// Disaggregated

double prefill_seq_throughput(const ParallelConfig& cfg, double ttft_ms) {
  if (!(ttft_ms > 0)) throw ValidationError("prefill latency must be > 0");
  return static_cast<double>(cfg.batch) * cfg.dp * 1000.0 / ttft_ms;
}

double decode_seq_throughput(const ParallelConfig& cfg, double tpot_ms, std::int64_t osl) {
  const double phase_ms = static_cast<double>(osl - 1) * tpot_ms;
  if (!(phase_ms > 0)) return kInf;
  return static_cast<double>(cfg.batch) * cfg.dp * 1000.0 / phase_ms;
}

bool plan_better(const DisaggPlan& a, const DisaggPlan& b) {
  if (a.throughput_per_gpu != b.throughput_per_gpu) {
    return a.throughput_per_gpu > b.throughput_per_gpu;
  }
  return std::tie(a.gpus, a.ttft, a.x, a.y, a.prefill_index, a.decode_index) <
         std::tie(b.gpus, b.ttft, b.x, b.y, b.prefill_index, b.decode_index);
}

namespace {

// Best plan for decode candidate `d` over every admissible prefill candidate.
std::optional<DisaggPlan> best_for_decode(std::span<const DisaggCandidate> prefill,
                                          std::span<const std::size_t> prefill_ok,
                                          const DisaggCandidate& dec, std::size_t d,
                                          const WorkloadSpec& w) {
  const ServingConstants& k = w.constants;
  std::optional<DisaggPlan> best;
  for (std::size_t p : prefill_ok) {
    const DisaggCandidate& pre = prefill[p];
    for (int x = 1; x <= k.max_prefill_workers; ++x) {
      // G_total = x * G_pre + y * G_dec must be a valid count: solve for y.
      for (int g : w.gpus_valid) {
        const int rest = g - x * pre.gpus;
        if (rest < dec.gpus || rest % dec.gpus != 0) continue;
        const int y = rest / dec.gpus;
        if (y > k.max_decode_workers) continue;
        DisaggPlan plan;
        plan.prefill_cfg = pre.cfg;
        plan.decode_cfg = dec.cfg;
        plan.x = x;
        plan.y = y;
        plan.r_pre = pre.seq_throughput * x * k.alpha_pre;
        plan.r_dec = dec.seq_throughput * y * k.alpha_dec;
        plan.r_sys = std::min(plan.r_pre, plan.r_dec);
        plan.gpus = g;
        plan.throughput_per_gpu = plan.r_sys / g;
        plan.ttft = pre.latency * k.beta_ttft;
        plan.tpot = dec.latency;
        plan.prefill_index = p;
        plan.decode_index = d;
        if (!best || plan_better(plan, *best)) best = plan;
      }
    }
  }
  return best;
}

// Prefill candidates meeting the TTFT limit, reduced per GPU count to the
// ones that can still win some plan.
std::vector<std::size_t> admissible_prefill(std::span<const DisaggCandidate> prefill,
                                            const WorkloadSpec& w) {
  std::vector<std::size_t> ok;
  for (std::size_t i = 0; i < prefill.size(); ++i) {
    if (prefill[i].gpus >= 1 && prefill[i].latency * w.constants.beta_ttft <= w.ttft_bound()) {
      ok.push_back(i);
    }
  }
  std::sort(ok.begin(), ok.end(), [&](std::size_t a, std::size_t b) {
    const auto& pa = prefill[a];
    const auto& pb = prefill[b];
    if (pa.gpus != pb.gpus) return pa.gpus < pb.gpus;
    if (pa.seq_throughput != pb.seq_throughput) return pa.seq_throughput > pb.seq_throughput;
    if (pa.latency != pb.latency) return pa.latency < pb.latency;
    return a < b;
  });
  // A survivor must beat every higher-throughput peer on (latency, index):
  // the index still decides ties when the decode pool is the bottleneck.
  std::vector<std::size_t> kept;
  int group = -1;
  std::pair<double, std::size_t> best{kInf, 0};
  for (std::size_t i : ok) {
    if (prefill[i].gpus != group) {
      group = prefill[i].gpus;
      best = {kInf, 0};
    }
    const std::pair<double, std::size_t> key{prefill[i].latency, i};
    if (key < best) {
      kept.push_back(i);
      best = key;
    }
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

}  // namespace

std::vector<DisaggPlan> disaggregated_plans(std::span<const DisaggCandidate> prefill,
                                            std::span<const DisaggCandidate> decode,
                                            const WorkloadSpec& w) {
  const auto prefill_ok = admissible_prefill(prefill, w);
  std::vector<DisaggPlan> plans;
  if (prefill_ok.empty()) return plans;
  for (std::size_t d = 0; d < decode.size(); ++d) {
    if (decode[d].gpus < 1 || !(decode[d].latency <= w.tpot_bound())) continue;
    if (auto plan = best_for_decode(prefill, prefill_ok, decode[d], d, w)) {
      plans.push_back(*plan);
    }
  }
  return plans;
}

std::optional<DisaggPlan> estimate_disaggregated(std::span<const DisaggCandidate> prefill,
                                                 std::span<const DisaggCandidate> decode,
                                                 const WorkloadSpec& w) {
  std::optional<DisaggPlan> best;
  for (const auto& plan : disaggregated_plans(prefill, decode, w)) {
    if (!best || plan_better(plan, *best)) best = plan;
  }
  return best;
}

PerfEstimate to_estimate(const DisaggPlan& plan, const WorkloadSpec& w) {
  PerfEstimate e;
  e.mode = Mode::kDisaggregated;
  e.ttft = plan.ttft;
  e.tpot = plan.tpot;
  e.speed = plan.tpot > 0 ? 1000.0 / plan.tpot : kInf;
  // Token throughput of the matched system rate.
  e.throughput_per_gpu = plan.throughput_per_gpu * static_cast<double>(w.osl);
  e.batch = static_cast<std::int64_t>(plan.y) * plan.decode_cfg.batch * plan.decode_cfg.dp;
  e.gpus = plan.gpus;
  e.breakdown = {{"x", static_cast<double>(plan.x)},
                 {"y", static_cast<double>(plan.y)},
                 {"r_pre", plan.r_pre},
                 {"r_dec", plan.r_dec},
                 {"r_sys", plan.r_sys},
                 {"requests_per_gpu", plan.throughput_per_gpu}};
  return e;
}

}  // namespace llmconf
