// Copyright (c) 2026 The llmconf Authors.
// SPDX-License-Identifier: Apache-2.0

#include "llmconf/perfdb.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json_util.hpp"
#include "llmconf/error.hpp"
#include "llmconf/roofline.hpp"

namespace llmconf {

using detail::json;
using ordered_json = nlohmann::ordered_json;

std::string_view to_string(Provenance p) {
  return p == Provenance::kMeasured ? "measured" : "synthetic";
}

Provenance parse_provenance(std::string_view s) {
  if (s == "measured") return Provenance::kMeasured;
  if (s == "synthetic") return Provenance::kSynthetic;
  throw ParseError("unknown provenance '" + std::string(s) + "'");
}

Extrapolation parse_extrapolation(std::string_view s) {
  if (s == "strict") return Extrapolation::kStrict;
  if (s == "clamp") return Extrapolation::kClamp;
  if (s == "sol") return Extrapolation::kSol;
  throw ParseError("unknown extrapolation policy '" + std::string(s) + "'");
}

namespace {

constexpr std::uint8_t kNoAttn = 0xFF;
constexpr std::size_t kMaxAxes = 4;

struct GridKey {
  OpKind kind{};
  Quant quant{};
  std::uint8_t attn = kNoAttn;
  std::array<std::int64_t, kDimCount> fixed{};

  friend bool operator==(const GridKey&, const GridKey&) = default;
};

struct GridKeyHash {
  std::size_t operator()(const GridKey& k) const noexcept {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](std::uint64_t v) {
      h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    };
    mix(static_cast<std::uint64_t>(k.kind));
    mix(static_cast<std::uint64_t>(k.quant));
    mix(k.attn);
    for (auto v : k.fixed) mix(static_cast<std::uint64_t>(v));
    return static_cast<std::size_t>(h);
  }
};

bool is_fixed_dim(OpKind kind, Dim d) {
  const auto interp = interpolated_dims(kind);
  return std::find(interp.begin(), interp.end(), d) == interp.end() && !is_derived_dim(kind, d);
}

GridKey key_of(const OperatorQuery& q) {
  GridKey key;
  key.kind = q.kind;
  key.quant = q.quant;
  if (q.shape.attn()) key.attn = static_cast<std::uint8_t>(*q.shape.attn());
  for (Dim d : required_dims(q.kind)) {
    if (is_fixed_dim(q.kind, d)) key.fixed[static_cast<std::size_t>(d)] = q.shape.get(d);
  }
  return key;
}

std::vector<std::int64_t> coords_of(const OperatorQuery& q) {
  std::vector<std::int64_t> c;
  for (Dim d : interpolated_dims(q.kind)) c.push_back(q.shape.get(d));
  return c;
}

std::string location(const DbContents& contents, std::size_t record) {
  if (contents.source) {
    return contents.source->string() + ":" + std::to_string(record + 2);
  }
  return "record #" + std::to_string(record);
}

// Records that pass the per-record checks, grouped by key then coordinate.
using CoordMap = std::map<std::vector<std::int64_t>, std::size_t>;
using KeyedRecords = std::unordered_map<GridKey, CoordMap, GridKeyHash>;

std::vector<Finding> check_invariants(const DbContents& contents, KeyedRecords* keyed_out) {
  std::vector<Finding> findings;
  try {
    validate(contents.hardware);
  } catch (const ValidationError& e) {
    findings.push_back({"header", e.what()});
  }
  KeyedRecords keyed;
  for (std::size_t i = 0; i < contents.records.size(); ++i) {
    const OperatorRecord& r = contents.records[i];
    try {
      validate_query(r.query);
    } catch (const ValidationError& e) {
      findings.push_back({location(contents, i), e.what()});
      continue;
    }
    if (!(r.latency_us > 0) || !std::isfinite(r.latency_us)) {
      std::ostringstream os;
      os << describe(r.query) << ": latency_us must be positive, got " << r.latency_us;
      findings.push_back({location(contents, i), os.str()});
      continue;
    }
    auto [it, inserted] = keyed[key_of(r.query)].emplace(coords_of(r.query), i);
    if (!inserted) {
      findings.push_back({location(contents, i),
                          describe(r.query) + ": duplicate coordinate (first at " +
                              location(contents, it->second) + ")"});
    }
  }
  for (const auto& [key, coords] : keyed) {
    const std::size_t naxes = interpolated_dims(key.kind).size();
    std::vector<std::set<std::int64_t>> axis_values(naxes);
    for (const auto& [c, _] : coords) {
      for (std::size_t a = 0; a < naxes; ++a) axis_values[a].insert(c[a]);
    }
    std::size_t expected = 1;
    for (const auto& s : axis_values) expected *= s.size();
    if (expected != coords.size()) {
      const std::size_t first = coords.begin()->second;
      std::ostringstream os;
      os << describe(contents.records[first].query) << ": grid is not rectangular ("
         << coords.size() << " points, axes span " << expected << ")";
      findings.push_back({location(contents, first), os.str()});
    }
  }
  if (keyed_out) *keyed_out = std::move(keyed);
  return findings;
}

struct Grid {
  std::vector<Dim> dims;
  std::vector<std::vector<std::int64_t>> axes;
  std::vector<std::vector<double>> log_axes;
  std::vector<std::size_t> strides;
  std::vector<double> latency;
  std::vector<double> log_latency;
};

}  // namespace

struct PerfDatabase::Index {
  DbContents contents;
  std::unordered_map<GridKey, Grid, GridKeyHash> grids;
};

PerfDatabase PerfDatabase::build(DbContents contents, ExtrapolationPolicy policy) {
  KeyedRecords keyed;
  auto findings = check_invariants(contents, &keyed);
  if (!findings.empty()) {
    throw ValidationError(findings.front().location + ": " + findings.front().message);
  }
  auto index = std::make_shared<Index>();
  for (const auto& [key, coords] : keyed) {
    Grid g;
    const auto interp = interpolated_dims(key.kind);
    g.dims.assign(interp.begin(), interp.end());
    const std::size_t naxes = g.dims.size();
    std::vector<std::set<std::int64_t>> values(naxes);
    for (const auto& [c, _] : coords) {
      for (std::size_t a = 0; a < naxes; ++a) values[a].insert(c[a]);
    }
    g.axes.resize(naxes);
    g.log_axes.resize(naxes);
    g.strides.assign(naxes, 1);
    for (std::size_t a = 0; a < naxes; ++a) {
      g.axes[a].assign(values[a].begin(), values[a].end());
      for (auto v : g.axes[a]) g.log_axes[a].push_back(std::log(static_cast<double>(v)));
    }
    for (std::size_t a = naxes; a-- > 1;) g.strides[a - 1] = g.strides[a] * g.axes[a].size();
    g.latency.assign(coords.size(), 0.0);
    g.log_latency.assign(coords.size(), 0.0);
    for (const auto& [c, record] : coords) {
      std::size_t offset = 0;
      for (std::size_t a = 0; a < naxes; ++a) {
        const auto& axis = g.axes[a];
        offset += static_cast<std::size_t>(std::lower_bound(axis.begin(), axis.end(), c[a]) -
                                           axis.begin()) *
                  g.strides[a];
      }
      g.latency[offset] = contents.records[record].latency_us;
      g.log_latency[offset] = std::log(g.latency[offset]);
    }
    index->grids.emplace(key, std::move(g));
  }
  index->contents = std::move(contents);
  PerfDatabase db;
  db.index_ = std::move(index);
  db.policy_ = policy;
  return db;
}

const HardwareSpec& PerfDatabase::hardware() const { return index_->contents.hardware; }
const std::string& PerfDatabase::backend() const { return index_->contents.backend; }
const std::string& PerfDatabase::backend_version() const {
  return index_->contents.backend_version;
}
const std::vector<OperatorRecord>& PerfDatabase::records() const {
  return index_->contents.records;
}
const DbContents& PerfDatabase::contents() const { return index_->contents; }
std::size_t PerfDatabase::grid_count() const { return index_->grids.size(); }

PerfDatabase PerfDatabase::with_policy(ExtrapolationPolicy policy) const {
  PerfDatabase copy = *this;
  copy.policy_ = policy;
  return copy;
}

bool PerfDatabase::has_grid(const OperatorQuery& q) const {
  return index_->grids.contains(key_of(q));
}

namespace {

void set_coordinate(OperatorQuery& q, Dim d, std::int64_t v) {
  // Attention kv_len tracks seq_len so the (kv_len - seq_len) prefix is preserved.
  if (is_attention(q.kind) && d == Dim::kSeqLen) {
    q.shape.set(Dim::kKvLen, q.shape.get(Dim::kKvLen) - q.shape.get(Dim::kSeqLen) + v);
  }
  q.shape.set(d, v);
}

}  // namespace

double PerfDatabase::query_latency(const OperatorQuery& q) const {
  if (!q.backend.empty() && q.backend != index_->contents.backend) {
    throw MissingKeyError("database backend is '" + index_->contents.backend +
                          "', query asks for '" + q.backend + "'");
  }
  auto it = index_->grids.find(key_of(q));
  if (it == index_->grids.end()) throw MissingKeyError("no grid for " + describe(q));
  const Grid& g = it->second;
  const std::size_t naxes = g.dims.size();

  std::array<std::size_t, kMaxAxes> lo{};
  std::array<double, kMaxAxes> t{};
  std::array<std::int64_t, kMaxAxes> clamped{};
  std::array<Extrapolation, kMaxAxes> mode{};
  bool out_of_box = false;
  bool sol_scaling = false;

  for (std::size_t a = 0; a < naxes; ++a) {
    const auto& axis = g.axes[a];
    const std::int64_t x = q.shape.get(g.dims[a]);
    std::int64_t c = x;
    if (x < axis.front() || x > axis.back()) {
      const bool below = x < axis.front();
      mode[a] = below ? policy_.below : policy_.above;
      if (mode[a] == Extrapolation::kStrict) {
        throw ExtrapolationError(describe(q) + ": " + std::string(to_string(g.dims[a])) +
                                 " outside grid [" + std::to_string(axis.front()) + ", " +
                                 std::to_string(axis.back()) + "]");
      }
      c = below ? axis.front() : axis.back();
      out_of_box = true;
      sol_scaling = sol_scaling || mode[a] == Extrapolation::kSol;
    }
    clamped[a] = c;
    const auto pos = std::upper_bound(axis.begin(), axis.end(), c) - axis.begin() - 1;
    lo[a] = static_cast<std::size_t>(pos);
    if (axis[lo[a]] == c) {
      t[a] = 0.0;
    } else {
      const double lx = std::log(static_cast<double>(c));
      t[a] = (lx - g.log_axes[a][lo[a]]) / (g.log_axes[a][lo[a] + 1] - g.log_axes[a][lo[a]]);
    }
  }

  std::array<std::size_t, kMaxAxes> active{};
  std::size_t nactive = 0;
  std::size_t base = 0;
  for (std::size_t a = 0; a < naxes; ++a) {
    base += lo[a] * g.strides[a];
    if (t[a] > 0.0) active[nactive++] = a;
  }

  double value;
  if (nactive == 0) {
    value = g.latency[base];
  } else {
    std::array<double, 1u << kMaxAxes> logs{};
    double lo_bound = g.latency[base];
    double hi_bound = g.latency[base];
    const std::size_t corners = std::size_t{1} << nactive;
    for (std::size_t c = 0; c < corners; ++c) {
      std::size_t offset = base;
      for (std::size_t j = 0; j < nactive; ++j) {
        if (c & (std::size_t{1} << j)) offset += g.strides[active[j]];
      }
      logs[c] = g.log_latency[offset];
      lo_bound = std::min(lo_bound, g.latency[offset]);
      hi_bound = std::max(hi_bound, g.latency[offset]);
    }
    for (std::size_t j = nactive; j-- > 0;) {
      const std::size_t half = std::size_t{1} << j;
      for (std::size_t i = 0; i < half; ++i) {
        logs[i] = logs[i] + t[active[j]] * (logs[i + half] - logs[i]);
      }
    }
    value = std::clamp(std::exp(logs[0]), lo_bound, hi_bound);
  }

  if (out_of_box && sol_scaling) {
    OperatorQuery at_edge = q;
    OperatorQuery target = q;
    for (std::size_t a = 0; a < naxes; ++a) {
      if (clamped[a] == q.shape.get(g.dims[a])) continue;
      set_coordinate(at_edge, g.dims[a], clamped[a]);
      if (mode[a] == Extrapolation::kClamp) set_coordinate(target, g.dims[a], clamped[a]);
    }
    const HardwareSpec& hw = index_->contents.hardware;
    value *= sol_estimate(target, hw) / sol_estimate(at_edge, hw);
  }
  return value;
}

// ---------------------------------------------------------------------------
// File format

namespace {

OperatorRecord parse_record(const json& j, const std::string& where) {
  detail::reject_unknown_keys(j, {"kind", "quant", "shape", "latency_us", "provenance"}, where);
  OperatorRecord r;
  r.query.kind = parse_op_kind(detail::get_as<std::string>(j, "kind", where));
  r.query.quant = parse_quant(detail::get_as<std::string>(j, "quant", where));
  const json& shape = detail::require_field(j, "shape", where);
  detail::require_object(shape, where + ": shape");
  for (const auto& [key, value] : shape.items()) {
    if (key == "attn_kind") {
      if (!value.is_string()) throw ParseError(where + ": attn_kind must be a string");
      r.query.shape.set_attn(parse_attn_kind(value.get<std::string>()));
      continue;
    }
    const Dim d = parse_dim(key);
    if (!value.is_number_integer()) {
      throw ParseError(where + ": shape." + key + " must be an integer");
    }
    const auto v = value.get<std::int64_t>();
    // Non-positive values are kept (as negatives) so validation can report them.
    r.query.shape.set(d, v >= 1 ? v : std::min<std::int64_t>(v, -1));
  }
  r.latency_us = detail::get_as<double>(j, "latency_us", where);
  r.provenance = parse_provenance(detail::get_or<std::string>(j, "provenance", "measured", where));
  return r;
}

ordered_json record_to_json(const OperatorRecord& r) {
  ordered_json shape = ordered_json::object();
  for (Dim d : required_dims(r.query.kind)) {
    shape[std::string(to_string(d))] = r.query.shape.get(d);
  }
  if (r.query.shape.attn()) shape["attn_kind"] = std::string(to_string(*r.query.shape.attn()));
  ordered_json j = ordered_json::object();
  j["kind"] = std::string(to_string(r.query.kind));
  j["quant"] = std::string(to_string(r.query.quant));
  j["shape"] = std::move(shape);
  j["latency_us"] = r.latency_us;
  j["provenance"] = std::string(to_string(r.provenance));
  return j;
}

}  // namespace

DbContents read_db(std::istream& in, const std::string& source_name) {
  DbContents contents;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = source_name + ":" + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(where + ": malformed line: " + e.what());
    }
    if (!have_header) {
      detail::reject_unknown_keys(j, {"schema", "hardware", "backend", "backend_version"},
                                  where);
      const auto schema = detail::get_as<std::string>(j, "schema", where);
      if (schema != kPerfDbSchema) {
        throw ParseError(where + ": unsupported schema '" + schema + "'");
      }
      try {
        contents.hardware = hardware_from_json(detail::require_field(j, "hardware", where));
      } catch (const Error& e) {
        throw ParseError(where + ": " + e.what());
      }
      contents.backend = detail::get_as<std::string>(j, "backend", where);
      contents.backend_version = detail::get_as<std::string>(j, "backend_version", where);
      have_header = true;
      if (line_no != 1) throw ParseError(where + ": header must be the first line");
      continue;
    }
    try {
      contents.records.push_back(parse_record(j, where));
    } catch (const ParseError& e) {
      const std::string msg = e.what();
      throw ParseError(msg.rfind(where, 0) == 0 ? msg : where + ": " + msg);
    }
  }
  if (!have_header) throw ParseError(source_name + ": missing header line");
  return contents;
}

DbContents read_db(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string() + ": cannot open database");
  DbContents contents = read_db(in, path.string());
  contents.source = path;
  return contents;
}

PerfDatabase load_db(const std::filesystem::path& path, ExtrapolationPolicy policy) {
  return PerfDatabase::build(read_db(path), policy);
}

void write_db(std::ostream& out, const DbContents& contents) {
  ordered_json header = ordered_json::object();
  header["schema"] = std::string(kPerfDbSchema);
  header["hardware"] = ordered_json::parse(to_json(contents.hardware).dump());
  header["backend"] = contents.backend;
  header["backend_version"] = contents.backend_version;
  out << header.dump() << '\n';
  for (const auto& r : contents.records) out << record_to_json(r).dump() << '\n';
}

void save_db(const PerfDatabase& db, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(path.string() + ": cannot open for writing");
  write_db(out, db.contents());
}

ValidationReport validate_db(const DbContents& contents, std::span<const OperatorQuery> required) {
  ValidationReport report;
  KeyedRecords keyed;
  report.violations = check_invariants(contents, &keyed);
  std::unordered_set<GridKey, GridKeyHash> reported;
  for (const auto& q : required) {
    const GridKey key = key_of(q);
    if (keyed.contains(key) || !reported.insert(key).second) continue;
    report.gaps.push_back({"coverage", "no records for " + describe(q)});
  }
  return report;
}

ValidationReport validate_db(const PerfDatabase& db, std::span<const OperatorQuery> required) {
  return validate_db(db.contents(), required);
}

}  // namespace llmconf
