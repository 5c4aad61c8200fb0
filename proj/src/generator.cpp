// Copyright (c) 2026 The llmconf Authors.
// SPDX-License-Identifier: Apache-2.0

#include "llmconf/generator.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "json_util.hpp"

namespace llmconf {

using nlohmann::json;

namespace {

constexpr std::pair<FlagSource, std::string_view> kSourceNames[] = {
    {FlagSource::kNone, "none"},
    {FlagSource::kTp, "tp"},
    {FlagSource::kPp, "pp"},
    {FlagSource::kEp, "ep"},
    {FlagSource::kDp, "dp"},
    {FlagSource::kBatch, "batch"},
    {FlagSource::kCtxCapacity, "ctx_capacity"},
    {FlagSource::kKvMemFraction, "kv_mem_fraction"},
    {FlagSource::kCudaGraph, "cuda_graph"},
    {FlagSource::kChunkedPrefill, "chunked_prefill"},
};

bool is_bool_source(FlagSource s) {
  return s == FlagSource::kCudaGraph || s == FlagSource::kChunkedPrefill;
}

bool is_int_source(FlagSource s) {
  return s == FlagSource::kTp || s == FlagSource::kPp || s == FlagSource::kEp ||
         s == FlagSource::kDp || s == FlagSource::kBatch || s == FlagSource::kCtxCapacity;
}

std::int64_t int_field(const ParallelConfig& c, FlagSource s) {
  switch (s) {
    case FlagSource::kTp:
      return c.tp;
    case FlagSource::kPp:
      return c.pp;
    case FlagSource::kEp:
      return c.ep;
    case FlagSource::kDp:
      return c.dp;
    case FlagSource::kBatch:
      return c.batch;
    case FlagSource::kCtxCapacity:
      return c.ctx_capacity;
    default:
      return 0;
  }
}

std::string shortest(double v) {
  if (std::isnan(v)) return ".nan";
  if (std::isinf(v)) return v > 0 ? ".inf" : "-.inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fixed2(double v) {
  if (!std::isfinite(v)) return "inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

std::string yaml_value(const FlagValue& v) {
  struct Visitor {
    std::string operator()(bool b) const { return b ? "true" : "false"; }
    std::string operator()(std::int64_t i) const { return std::to_string(i); }
    std::string operator()(double d) const { return shortest(d); }
    std::string operator()(const std::string& s) const { return quote(s); }
  };
  return std::visit(Visitor{}, v);
}

FlagValue flag_value_from_json(const json& j, std::string_view where) {
  if (j.is_boolean()) return j.get<bool>();
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  throw ParseError(std::string(where) + ": flag value must be a scalar");
}

FlagValue flag_value_from_yaml(const YAML::Node& n) {
  if (!n.IsScalar()) throw ParseError("launch plan: flag values must be scalars");
  const std::string& text = n.Scalar();
  if (n.Tag() == "!") return text;  // quoted
  if (text == "true") return true;
  if (text == "false") return false;
  std::int64_t i = 0;
  auto ir = std::from_chars(text.data(), text.data() + text.size(), i);
  if (ir.ec == std::errc() && ir.ptr == text.data() + text.size()) return i;
  if (text == ".inf") return std::numeric_limits<double>::infinity();
  double d = 0;
  auto dr = std::from_chars(text.data(), text.data() + text.size(), d);
  if (dr.ec == std::errc() && dr.ptr == text.data() + text.size()) return d;
  return text;
}

const YAML::Node require(const YAML::Node& parent, const char* key, const std::string& where) {
  YAML::Node n = parent[key];
  if (!n) throw ParseError(where + ": missing field '" + key + "'");
  return n;
}

template <typename T>
T scalar(const YAML::Node& parent, const char* key, const std::string& where) {
  try {
    return require(parent, key, where).as<T>();
  } catch (const YAML::Exception&) {
    throw ParseError(where + ": field '" + key + "' has the wrong type");
  }
}

Pool make_pool(std::string role, int replicas, const ParallelConfig& cfg,
               const BackendProfile& profile) {
  Pool p;
  p.role = std::move(role);
  p.replicas = replicas;
  p.tp = cfg.tp;
  p.pp = cfg.pp;
  p.ep = cfg.ep;
  p.dp = cfg.dp;
  p.flags = resolve_flags(profile, cfg);
  return p;
}

}  // namespace

std::string_view to_string(FlagSource s) {
  for (const auto& [k, name] : kSourceNames) {
    if (k == s) return name;
  }
  return "none";
}

FlagSource parse_flag_source(std::string_view s) {
  for (const auto& [k, name] : kSourceNames) {
    if (name == s) return k;
  }
  throw ParseError("unknown flag source '" + std::string(s) + "'");
}

void validate(const BackendProfile& p) {
  const std::string where = "backend profile " + p.backend + " " + p.version;
  if (p.backend.empty() || p.version.empty() || p.launcher.empty()) {
    throw ValidationError(where + ": backend, version and launcher are required");
  }
  bool graph = false;
  bool kv = false;
  bool chunked = false;
  for (const auto& r : p.rules) {
    if (r.flag.empty()) throw ValidationError(where + ": empty flag name");
    if (r.source == FlagSource::kNone && !r.value) {
      throw ValidationError(where + ": flag " + r.flag + " has neither a source nor a value");
    }
    if (r.invert && !is_bool_source(r.source)) {
      throw ValidationError(where + ": flag " + r.flag + " inverts a non-boolean source");
    }
    if ((r.enable_above_one || r.gated_by_chunking) && !is_int_source(r.source)) {
      throw ValidationError(where + ": flag " + r.flag + " needs an integer source");
    }
    graph = graph || r.source == FlagSource::kCudaGraph;
    kv = kv || r.source == FlagSource::kKvMemFraction;
    chunked = chunked || r.source == FlagSource::kChunkedPrefill || r.gated_by_chunking;
  }
  if (!graph || !kv || !chunked) {
    throw ValidationError(where +
                          ": must map cuda graph, kv-cache memory fraction and chunked context");
  }
}

BackendProfile backend_profile_from_json(const json& j) {
  constexpr std::string_view where = "backend profile";
  detail::reject_unknown_keys(j, {"backend", "version", "launcher", "bool_as_switch", "flags"},
                              where);
  BackendProfile p;
  p.backend = detail::get_as<std::string>(j, "backend", where);
  p.version = detail::get_as<std::string>(j, "version", where);
  p.launcher = detail::get_as<std::string>(j, "launcher", where);
  p.bool_as_switch = detail::get_or<bool>(j, "bool_as_switch", false, where);
  const json& flags = detail::require_field(j, "flags", where);
  if (!flags.is_array()) throw ParseError("backend profile: 'flags' must be an array");
  for (const json& f : flags) {
    constexpr std::string_view fw = "backend profile flag";
    detail::reject_unknown_keys(f,
                                {"flag", "source", "invert", "enable_above_one",
                                 "gated_by_chunking", "off_value", "value", "curated"},
                                fw);
    FlagRule r;
    r.flag = detail::get_as<std::string>(f, "flag", fw);
    r.source = parse_flag_source(detail::get_or<std::string>(f, "source", "none", fw));
    r.invert = detail::get_or<bool>(f, "invert", false, fw);
    r.enable_above_one = detail::get_or<bool>(f, "enable_above_one", false, fw);
    r.gated_by_chunking = detail::get_or<bool>(f, "gated_by_chunking", false, fw);
    r.off_value = detail::get_or<std::int64_t>(f, "off_value", -1, fw);
    r.curated = detail::get_or<bool>(f, "curated", true, fw);
    if (f.contains("value")) r.value = flag_value_from_json(f["value"], fw);
    p.rules.push_back(std::move(r));
  }
  validate(p);
  return p;
}

BackendProfile load_backend_profile(const std::filesystem::path& path) {
  return backend_profile_from_json(detail::read_json_file(path));
}

void ProfileRegistry::add(BackendProfile p) {
  validate(p);
  auto key = std::make_pair(p.backend, p.version);
  profiles_.insert_or_assign(std::move(key), std::move(p));
}

const BackendProfile& ProfileRegistry::find(const std::string& backend,
                                            const std::string& version) const {
  auto it = profiles_.find({backend, version});
  if (it == profiles_.end()) {
    throw NotFoundError("no backend profile for " + backend + " " + version);
  }
  return it->second;
}

const BackendProfile& ProfileRegistry::latest(const std::string& backend) const {
  const BackendProfile* found = nullptr;
  for (const auto& [key, p] : profiles_) {
    if (key.first == backend) found = &p;
  }
  if (found == nullptr) throw NotFoundError("no backend profile for " + backend);
  return *found;
}

std::vector<std::pair<std::string, std::string>> ProfileRegistry::keys() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [key, _] : profiles_) out.push_back(key);
  return out;
}

ProfileRegistry load_profiles(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      files.push_back(entry.path());
    }
  }
  if (ec) throw NotFoundError("cannot read backend profiles from " + dir.string());
  std::sort(files.begin(), files.end());
  ProfileRegistry reg;
  for (const auto& f : files) reg.add(load_backend_profile(f));
  return reg;
}

std::filesystem::path default_profile_dir() {
  if (const char* env = std::getenv("LLMCONF_DATA"); env != nullptr && *env != '\0') {
    return std::filesystem::path(env) / "backends";
  }
  return std::filesystem::path(LLMCONF_DATA_DIR) / "backends";
}

int LaunchPlan::gpus() const {
  int total = 0;
  for (const auto& p : pools) total += p.gpus();
  return total;
}

std::vector<std::pair<std::string, FlagValue>> resolve_flags(const BackendProfile& profile,
                                                             const ParallelConfig& cfg) {
  std::vector<std::pair<std::string, FlagValue>> out;
  for (const auto& r : profile.rules) {
    FlagValue v;
    if (r.source == FlagSource::kNone) {
      v = *r.value;
    } else if (r.source == FlagSource::kCudaGraph) {
      v = cfg.cuda_graph != r.invert;
    } else if (r.source == FlagSource::kChunkedPrefill) {
      v = cfg.chunked_prefill != r.invert;
    } else if (r.source == FlagSource::kKvMemFraction) {
      v = cfg.kv_mem_fraction;
    } else if (r.enable_above_one) {
      v = int_field(cfg, r.source) > 1;
    } else if (r.gated_by_chunking && !cfg.chunked_prefill) {
      v = r.off_value;
    } else {
      v = int_field(cfg, r.source);
    }
    out.emplace_back(r.flag, std::move(v));
  }
  return out;
}

void check_topology(const LaunchPlan& plan) {
  for (const auto& p : plan.pools) {
    if (p.replicas < 1 || p.tp < 1 || p.pp < 1 || p.ep < 1 || p.dp < 1) {
      throw ValidationError("launch plan: pool '" + p.role + "' has a non-positive degree");
    }
  }
  if (plan.gpus() != plan.predicted.gpus) {
    throw ValidationError("launch plan: pools use " + std::to_string(plan.gpus()) +
                          " GPUs but the plan predicts " + std::to_string(plan.predicted.gpus));
  }
}

LaunchPlan make_launch_plan(const ParetoPoint& point, const std::string& model,
                            const BackendProfile& profile) {
  LaunchPlan plan;
  plan.backend = profile.backend;
  plan.version = profile.version;
  plan.model = model;
  plan.launcher = profile.launcher;
  plan.bool_as_switch = profile.bool_as_switch;
  const PerfEstimate& e = point.estimate;
  plan.predicted = Predicted{e.mode, e.ttft, e.tpot, e.speed, e.throughput_per_gpu, e.gpus};
  if (point.plan) {
    plan.pools.push_back(make_pool("prefill", point.plan->x, point.plan->prefill_cfg, profile));
    plan.pools.push_back(make_pool("decode", point.plan->y, point.plan->decode_cfg, profile));
  } else if (point.config) {
    plan.pools.push_back(make_pool(std::string(to_string(e.mode)), 1, *point.config, profile));
  } else {
    throw ValidationError("launch plan: entry has neither a config nor a plan");
  }
  check_topology(plan);
  return plan;
}

std::string command_line(const LaunchPlan& plan, const Pool& pool) {
  std::string cmd = plan.launcher + " " + plan.model;
  for (const auto& [flag, value] : pool.flags) {
    if (const bool* b = std::get_if<bool>(&value); b != nullptr && plan.bool_as_switch) {
      if (*b) cmd += " " + flag;
      continue;
    }
    std::string v = yaml_value(value);
    if (std::holds_alternative<std::string>(value)) v = std::get<std::string>(value);
    cmd += " " + flag + " " + v;
  }
  return cmd;
}

std::string emit_yaml(const LaunchPlan& plan) {
  check_topology(plan);
  const Predicted& pr = plan.predicted;
  std::ostringstream os;
  os << "# llmconf launch plan: " << plan.model << " on " << plan.backend << ' ' << plan.version
     << '\n';
  os << "# predicted " << to_string(pr.mode) << ": ttft " << fixed2(pr.ttft_ms) << " ms, tpot "
     << fixed2(pr.tpot_ms) << " ms, " << fixed2(pr.speed) << " tokens/s/user, "
     << fixed2(pr.throughput_per_gpu) << " tokens/s/GPU on " << pr.gpus << " GPUs\n";
  os << "backend: " << quote(plan.backend) << '\n';
  os << "version: " << quote(plan.version) << '\n';
  os << "model: " << quote(plan.model) << '\n';
  os << "predicted:\n";
  os << "  mode: " << to_string(pr.mode) << '\n';
  os << "  ttft_ms: " << shortest(pr.ttft_ms) << '\n';
  os << "  tpot_ms: " << shortest(pr.tpot_ms) << '\n';
  os << "  speed: " << shortest(pr.speed) << '\n';
  os << "  throughput_per_gpu: " << shortest(pr.throughput_per_gpu) << '\n';
  os << "  gpus: " << pr.gpus << '\n';
  os << "pools:\n";
  for (const auto& p : plan.pools) {
    os << "  - role: " << p.role << '\n';
    os << "    replicas: " << p.replicas << '\n';
    os << "    tp: " << p.tp << '\n';
    os << "    pp: " << p.pp << '\n';
    os << "    ep: " << p.ep << '\n';
    os << "    dp: " << p.dp << '\n';
    os << "    gpus: " << p.gpus() << '\n';
    if (p.flags.empty()) {
      os << "    flags: {}\n";
    } else {
      os << "    flags:\n";
      for (const auto& [flag, value] : p.flags) {
        os << "      " << quote(flag) << ": " << yaml_value(value) << '\n';
      }
    }
    os << "    serve:\n";
    os << "      launcher: " << quote(plan.launcher) << '\n';
    os << "      bool_flags: " << (plan.bool_as_switch ? "switch" : "value") << '\n';
    os << "      command: " << quote(command_line(plan, p)) << '\n';
  }
  return os.str();
}

LaunchPlan parse_launch_yaml(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ParseError(std::string("launch plan: ") + e.what());
  }
  if (!root.IsMap()) throw ParseError("launch plan: expected a mapping");
  const std::string where = "launch plan";
  LaunchPlan plan;
  plan.backend = scalar<std::string>(root, "backend", where);
  plan.version = scalar<std::string>(root, "version", where);
  plan.model = scalar<std::string>(root, "model", where);
  const YAML::Node pred = require(root, "predicted", where);
  const std::string pw = where + ".predicted";
  plan.predicted.mode = parse_mode(scalar<std::string>(pred, "mode", pw));
  plan.predicted.ttft_ms = scalar<double>(pred, "ttft_ms", pw);
  plan.predicted.tpot_ms = scalar<double>(pred, "tpot_ms", pw);
  plan.predicted.speed = scalar<double>(pred, "speed", pw);
  plan.predicted.throughput_per_gpu = scalar<double>(pred, "throughput_per_gpu", pw);
  plan.predicted.gpus = scalar<int>(pred, "gpus", pw);
  const YAML::Node pools = require(root, "pools", where);
  if (!pools.IsSequence() || pools.size() == 0) {
    throw ParseError("launch plan: 'pools' must be a non-empty list");
  }
  for (std::size_t i = 0; i < pools.size(); ++i) {
    const YAML::Node n = pools[i];
    const std::string w = where + ".pools[" + std::to_string(i) + "]";
    Pool p;
    p.role = scalar<std::string>(n, "role", w);
    p.replicas = scalar<int>(n, "replicas", w);
    p.tp = scalar<int>(n, "tp", w);
    p.pp = scalar<int>(n, "pp", w);
    p.ep = scalar<int>(n, "ep", w);
    p.dp = scalar<int>(n, "dp", w);
    if (n["gpus"] && scalar<int>(n, "gpus", w) != p.gpus()) {
      throw ValidationError(w + ": gpus does not equal replicas * tp * pp * dp");
    }
    const YAML::Node flags = require(n, "flags", w);
    if (!flags.IsMap()) throw ParseError(w + ": 'flags' must be a mapping");
    for (const auto& kv : flags) {
      p.flags.emplace_back(kv.first.as<std::string>(), flag_value_from_yaml(kv.second));
    }
    const YAML::Node serve = require(n, "serve", w);
    const std::string launcher = scalar<std::string>(serve, "launcher", w + ".serve");
    const bool as_switch = scalar<std::string>(serve, "bool_flags", w + ".serve") == "switch";
    if (i == 0) {
      plan.launcher = launcher;
      plan.bool_as_switch = as_switch;
    } else if (launcher != plan.launcher || as_switch != plan.bool_as_switch) {
      throw ValidationError(w + ": pools disagree on the launcher");
    }
    plan.pools.push_back(std::move(p));
  }
  check_topology(plan);
  return plan;
}

}  // namespace llmconf
