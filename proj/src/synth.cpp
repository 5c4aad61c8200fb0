// Copyright (c) 2026 The llmconf Authors.
// SPDX-License-Identifier: Apache-2.0

#include "llmconf/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "json_util.hpp"
#include "llmconf/error.hpp"
#include "llmconf/roofline.hpp"

namespace llmconf {

using detail::json;

namespace {

std::vector<std::int64_t> powers_of_two(int lo, int hi) {
  std::vector<std::int64_t> v;
  for (int e = lo; e <= hi; ++e) v.push_back(std::int64_t{1} << e);
  return v;
}

bool is_template_dim(OpKind kind, Dim d) {
  const auto interp = interpolated_dims(kind);
  return std::find(interp.begin(), interp.end(), d) == interp.end() && !is_derived_dim(kind, d);
}

std::uint64_t fnv1a(std::uint64_t h, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xFF;
    h *= 1099511628211ULL;
  }
  return h;
}

json shape_to_json(const OperatorQuery& q) {
  json shape = json::object();
  for (Dim d : required_dims(q.kind)) {
    if (is_template_dim(q.kind, d)) shape[std::string(to_string(d))] = q.shape.get(d);
  }
  if (q.shape.attn()) shape["attn_kind"] = std::string(to_string(*q.shape.attn()));
  return shape;
}

json axes_to_json(const GridAxes& axes) {
  json j = json::object();
  for (const auto& [d, values] : axes) j[std::string(to_string(d))] = values;
  return j;
}

GridAxes axes_from_json(const json& j, const std::string& where) {
  detail::require_object(j, where);
  GridAxes axes;
  for (const auto& [key, values] : j.items()) {
    if (!values.is_array()) throw ParseError(where + "." + key + ": expected an array");
    std::vector<std::int64_t> v;
    for (const auto& x : values) {
      if (!x.is_number_integer()) throw ParseError(where + "." + key + ": expected integers");
      v.push_back(x.get<std::int64_t>());
    }
    axes[parse_dim(key)] = std::move(v);
  }
  return axes;
}

void check_axis(Dim d, const std::vector<std::int64_t>& v, const std::string& where) {
  if (v.empty()) throw ValidationError(where + ": axis " + std::string(to_string(d)) + " is empty");
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] < 1) {
      throw ValidationError(where + ": axis " + std::string(to_string(d)) + " has a value < 1");
    }
    if (i > 0 && v[i] <= v[i - 1]) {
      throw ValidationError(where + ": axis " + std::string(to_string(d)) +
                            " is not strictly ascending");
    }
  }
}

}  // namespace

GridAxes default_grid_axes() {
  return GridAxes{
      {Dim::kM, powers_of_two(0, 20)},
      {Dim::kBatch, powers_of_two(0, 10)},
      {Dim::kSeqLen, powers_of_two(0, 17)},
      {Dim::kMessageBytes, powers_of_two(10, 34)},
      {Dim::kTokens, powers_of_two(0, 20)},
  };
}

const std::vector<std::int64_t>& GridSpec::axis(const GridEntry& entry, Dim d) const {
  if (auto it = entry.axes.find(d); it != entry.axes.end()) return it->second;
  if (auto it = axes.find(d); it != axes.end()) return it->second;
  throw ValidationError("grid entry " + describe(entry.base) + " has no values for axis " +
                        std::string(to_string(d)));
}

void validate(const GridSpec& spec) {
  for (const auto& [d, v] : spec.axes) check_axis(d, v, "grid axes");
  for (std::size_t i = 0; i < spec.entries.size(); ++i) {
    const GridEntry& e = spec.entries[i];
    const std::string where = "grid entry #" + std::to_string(i);
    for (const auto& [d, v] : e.axes) check_axis(d, v, where);
    OperatorQuery probe = e.base;
    for (Dim d : interpolated_dims(e.base.kind)) probe.shape.set(d, spec.axis(e, d).front());
    if (is_attention(probe.kind)) probe.shape.set(Dim::kKvLen, probe.shape.get(Dim::kSeqLen));
    try {
      validate_query(probe);
    } catch (const ValidationError& err) {
      throw ValidationError(where + ": " + err.what());
    }
  }
}

json to_json(const GridSpec& spec) {
  json entries = json::array();
  for (const auto& e : spec.entries) {
    json j{{"kind", std::string(to_string(e.base.kind))},
           {"quant", std::string(to_string(e.base.quant))},
           {"shape", shape_to_json(e.base)}};
    if (!e.axes.empty()) j["axes"] = axes_to_json(e.axes);
    entries.push_back(std::move(j));
  }
  return json{{"axes", axes_to_json(spec.axes)}, {"entries", std::move(entries)}};
}

GridSpec grid_spec_from_json(const json& j) {
  detail::reject_unknown_keys(j, {"axes", "entries"}, "grid spec");
  GridSpec spec;
  spec.axes = j.contains("axes") ? axes_from_json(j["axes"], "axes") : default_grid_axes();
  const json& entries = detail::require_field(j, "entries", "grid spec");
  if (!entries.is_array()) throw ParseError("grid spec: entries must be an array");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const std::string where = "entries[" + std::to_string(i) + "]";
    const json& ej = entries[i];
    detail::reject_unknown_keys(ej, {"kind", "quant", "shape", "axes"}, where);
    GridEntry e;
    e.base.kind = parse_op_kind(detail::get_as<std::string>(ej, "kind", where));
    e.base.quant = parse_quant(detail::get_as<std::string>(ej, "quant", where));
    const json& shape = detail::require_field(ej, "shape", where);
    detail::require_object(shape, where + ".shape");
    for (const auto& [key, value] : shape.items()) {
      if (key == "attn_kind") {
        if (!value.is_string()) throw ParseError(where + ": attn_kind must be a string");
        e.base.shape.set_attn(parse_attn_kind(value.get<std::string>()));
        continue;
      }
      const Dim d = parse_dim(key);
      if (!is_template_dim(e.base.kind, d)) {
        throw ParseError(where + ".shape: '" + key + "' is not a fixed dimension of " +
                         std::string(to_string(e.base.kind)));
      }
      if (!value.is_number_integer()) throw ParseError(where + ".shape." + key + ": integer");
      e.base.shape.set(d, value.get<std::int64_t>());
    }
    if (ej.contains("axes")) e.axes = axes_from_json(ej["axes"], where + ".axes");
    spec.entries.push_back(std::move(e));
  }
  validate(spec);
  return spec;
}

GridSpec load_grid_spec(const std::filesystem::path& path) {
  return grid_spec_from_json(detail::read_document(path));
}

GridSpec derive_grid_spec(std::span<const ModelSpec> models,
                          std::span<const ParallelConfig> configs, GridAxes axes) {
  GridSpec spec;
  spec.axes = axes.empty() ? default_grid_axes() : std::move(axes);
  std::map<std::string, GridEntry> unique;
  // A one-token prompt plus one decoding sequence touches every operator a
  // config can emit.
  const StepShape probe = StepShape::mixed(1, 1, 1, 1);
  for (const auto& model : models) {
    for (const auto& cfg : configs) {
      if (!is_consistent(model, cfg)) continue;
      for (const auto& entry : decompose(model, cfg, probe).entries) {
        GridEntry e;
        e.base.kind = entry.query.kind;
        e.base.quant = entry.query.quant;
        for (Dim d : required_dims(e.base.kind)) {
          if (is_template_dim(e.base.kind, d)) e.base.shape.set(d, entry.query.shape.get(d));
        }
        if (entry.query.shape.attn()) e.base.shape.set_attn(*entry.query.shape.attn());
        json key{{"kind", std::string(to_string(e.base.kind))},
                 {"quant", std::string(to_string(e.base.quant))},
                 {"shape", shape_to_json(e.base)}};
        unique.emplace(key.dump(), std::move(e));
      }
    }
  }
  for (auto& [_, e] : unique) spec.entries.push_back(std::move(e));
  validate(spec);
  return spec;
}

double synthetic_efficiency(const GridSpec& spec, const GridEntry& entry,
                            const OperatorQuery& q, std::uint64_t seed, double amplitude) {
  std::uint64_t h = fnv1a(14695981039346656037ULL, seed);
  h = fnv1a(h, static_cast<std::uint64_t>(entry.base.kind));
  h = fnv1a(h, static_cast<std::uint64_t>(entry.base.quant));
  h = fnv1a(h, entry.base.shape.attn() ? static_cast<std::uint64_t>(*entry.base.shape.attn())
                                       : 0xFF);
  for (auto v : entry.base.shape.dims()) h = fnv1a(h, static_cast<std::uint64_t>(v));
  const double phase =
      static_cast<double>(h >> 11) * 0x1.0p-53 * 2.0 * std::numbers::pi;

  double arg = phase;
  for (Dim d : interpolated_dims(entry.base.kind)) {
    const auto& axis = spec.axis(entry, d);
    double widest = 0;
    for (std::size_t i = 1; i < axis.size(); ++i) {
      widest = std::max(widest, std::log2(static_cast<double>(axis[i])) -
                                    std::log2(static_cast<double>(axis[i - 1])));
    }
    // Bounds the swing between neighbouring grid points to 0.09 * amplitude.
    const double omega = widest > 0 ? 0.09 / widest : 0.0;
    arg += omega * std::log2(static_cast<double>(q.shape.get(d)));
  }
  return 2.0 + amplitude * std::sin(arg);
}

DbContents synthesize(const HardwareSpec& hw, const GridSpec& spec, std::uint64_t seed,
                      const SynthOptions& options) {
  validate(hw);
  validate(spec);
  if (!(options.amplitude >= 0 && options.amplitude <= 1)) {
    throw ValidationError("synthetic amplitude must be in [0, 1]");
  }
  if (options.constant_latency_us && !(*options.constant_latency_us > 0)) {
    throw ValidationError("constant latency must be positive");
  }
  DbContents contents;
  contents.hardware = hw;
  contents.backend = options.backend;
  contents.backend_version = options.backend_version;
  for (const auto& entry : spec.entries) {
    const auto interp = interpolated_dims(entry.base.kind);
    std::vector<const std::vector<std::int64_t>*> axes;
    for (Dim d : interp) axes.push_back(&spec.axis(entry, d));
    std::vector<std::size_t> idx(interp.size(), 0);
    for (bool done = false; !done;) {
      OperatorRecord r;
      r.query = entry.base;
      r.query.backend.clear();
      for (std::size_t a = 0; a < interp.size(); ++a) r.query.shape.set(interp[a], (*axes[a])[idx[a]]);
      if (is_attention(r.query.kind)) r.query.shape.set(Dim::kKvLen, r.query.shape.get(Dim::kSeqLen));
      r.provenance = Provenance::kSynthetic;
      r.latency_us = options.constant_latency_us
                         ? *options.constant_latency_us
                         : sol_estimate(r.query, hw) *
                               synthetic_efficiency(spec, entry, r.query, seed, options.amplitude);
      contents.records.push_back(std::move(r));
      done = true;
      for (std::size_t a = interp.size(); a-- > 0;) {
        if (++idx[a] < axes[a]->size()) {
          done = false;
          break;
        }
        idx[a] = 0;
      }
    }
  }
  return contents;
}

PerfDatabase generate_synthetic_db(const HardwareSpec& hw, const GridSpec& spec,
                                   std::uint64_t seed, const SynthOptions& options,
                                   ExtrapolationPolicy policy) {
  return PerfDatabase::build(synthesize(hw, spec, seed, options), policy);
}

}  // namespace llmconf
