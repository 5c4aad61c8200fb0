// Copyright (c) 2026 The llmconf Authors.
// SPDX-License-Identifier: Apache-2.0

#include "llmconf/cli.hpp"

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "json_util.hpp"
#include "llmconf/generator.hpp"
#include "llmconf/moe_load.hpp"
#include "llmconf/report.hpp"
#include "llmconf/service.hpp"
#include "llmconf/synth.hpp"

namespace llmconf {

using nlohmann::json;

namespace {

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path + " for writing");
  f << content;
  if (!f) throw Error("failed writing " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw NotFoundError("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void emit(const std::string& content, const std::string& path, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << content;
  } else {
    write_file(path, content);
  }
}

struct WorkloadArgs {
  std::string path;
  std::vector<std::string> overrides;

  WorkloadSpec load() const {
    const WorkloadSpec defaults;
    json doc = path.empty() ? json{{"isl", defaults.isl}, {"osl", defaults.osl}}
                            : load_workload_document(path);
    for (const auto& o : overrides) apply_override(doc, o);
    return workload_from_json(doc);
  }
};

void add_workload_options(CLI::App* cmd, WorkloadArgs& w) {
  cmd->add_option("--workload,-w", w.path, "Workload file (YAML or JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--set", w.overrides, "Workload override key=value (repeatable)");
}

// Every (tp, pp, ep, dp) combination of the space, batch 1.
std::vector<ParallelConfig> space_configs(const CandidateSpace& s) {
  std::vector<ParallelConfig> out;
  for (int tp : s.tp) {
    for (int pp : s.pp) {
      for (int ep : s.ep) {
        for (int dp : s.dp) {
          ParallelConfig c;
          c.tp = tp;
          c.pp = pp;
          c.ep = ep;
          c.dp = dp;
          c.ctx_capacity = s.ctx_capacity;
          c.chunked_prefill = s.chunked_prefill;
          c.kv_mem_fraction = s.kv_mem_fraction;
          c.cuda_graph = s.cuda_graph;
          c.backend = s.backend;
          out.push_back(c);
        }
      }
    }
  }
  return out;
}

json findings_json(const std::vector<Finding>& findings) {
  json a = json::array();
  for (const auto& f : findings) a.push_back(json{{"location", f.location}, {"message", f.message}});
  return a;
}

json step_json(const StepLatency& s, Phase phase, std::int64_t batch, std::int64_t seq) {
  json breakdown = json::object();
  for (const auto& [kind, ms] : s.breakdown) breakdown[std::string(to_string(kind))] = ms;
  json ops = json::array();
  for (const auto& [label, ms] : s.ops) ops.push_back(json::array({label, ms}));
  return json{{"phase", std::string(to_string(phase))},
              {"batch", batch},
              {"seq_len", seq},
              {"total_ms", s.total},
              {"pp_factor", s.pp_factor},
              {"breakdown", std::move(breakdown)},
              {"ops", std::move(ops)}};
}

std::string format_ms(double v) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(3);
  os << v;
  return os.str();
}

// Parses "id=path".
std::pair<std::string, std::string> split_binding(const std::string& s) {
  const auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == s.size()) {
    throw CLI::ValidationError("expected id=path, got '" + s + "'");
  }
  return {s.substr(0, eq), s.substr(eq + 1)};
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"llmconf: LLM serving configuration search", "llmconf"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "llmconf 0.1.0");

  // dbgen
  auto* dbgen = app.add_subcommand("dbgen", "Generate a synthetic performance database");
  std::string hw_path;
  std::string grid_path;
  std::vector<std::string> dbgen_models;
  WorkloadArgs dbgen_workload;
  std::uint64_t seed = 0;
  SynthOptions synth;
  std::optional<double> constant_latency;
  std::string dbgen_out;
  dbgen->add_option("--hardware", hw_path, "Hardware spec")->required()->check(CLI::ExistingFile);
  auto* grid_opt =
      dbgen->add_option("--grid", grid_path, "Grid spec")->check(CLI::ExistingFile);
  auto* model_opt = dbgen->add_option("--model", dbgen_models, "Derive the grid from these models")
                        ->check(CLI::ExistingFile);
  grid_opt->excludes(model_opt);
  add_workload_options(dbgen, dbgen_workload);
  dbgen->add_option("--seed", seed, "Synthesis seed");
  dbgen->add_option("--amplitude", synth.amplitude, "Efficiency ripple amplitude")
      ->check(CLI::Range(0.0, 1.9));
  dbgen->add_option("--constant-latency", constant_latency, "Every record gets this latency (us)");
  dbgen->add_option("--backend", synth.backend, "Backend recorded in the database");
  dbgen->add_option("--backend-version", synth.backend_version, "Backend version");
  dbgen->add_option("--out,-o", dbgen_out, "Output database (.jsonl)")->required();

  // dbcheck
  auto* dbcheck = app.add_subcommand("dbcheck", "Validate a performance database");
  std::string check_db;
  std::vector<std::string> check_models;
  WorkloadArgs check_workload;
  dbcheck->add_option("--db", check_db, "Database")->envname("LLMCONF_DB")->required();
  dbcheck->add_option("--model", check_models, "Report coverage gaps for these models")
      ->check(CLI::ExistingFile);
  add_workload_options(dbcheck, check_workload);

  // estimate
  auto* estimate = app.add_subcommand("estimate", "Estimate one configuration");
  std::string est_db;
  std::string est_model;
  WorkloadArgs est_workload;
  ParallelConfig est_cfg;
  std::string est_mode = "aggregated";
  std::string est_step;
  std::int64_t est_seq = 0;
  bool est_moe_profile = false;
  std::optional<std::int64_t> est_tokens;
  estimate->add_option("--db", est_db, "Database")->envname("LLMCONF_DB")->required();
  estimate->add_option("--model", est_model, "Model spec")->required()->check(CLI::ExistingFile);
  add_workload_options(estimate, est_workload);
  estimate->add_option("--tp", est_cfg.tp)->check(CLI::PositiveNumber);
  estimate->add_option("--pp", est_cfg.pp)->check(CLI::PositiveNumber);
  estimate->add_option("--ep", est_cfg.ep)->check(CLI::PositiveNumber);
  estimate->add_option("--dp", est_cfg.dp)->check(CLI::PositiveNumber);
  estimate->add_option("--batch", est_cfg.batch)->check(CLI::PositiveNumber);
  auto* ctx_opt = estimate->add_option("--ctx-capacity", est_cfg.ctx_capacity)
                      ->check(CLI::PositiveNumber);
  auto* chunk_opt = estimate->add_flag("--chunked-prefill", est_cfg.chunked_prefill);
  auto* mode_opt = estimate->add_option("--mode", est_mode, "static | aggregated")
                       ->check(CLI::IsMember({"static", "aggregated"}));
  auto* step_opt = estimate->add_option("--step", est_step, "Single step: prefill | decode")
                       ->check(CLI::IsMember({"prefill", "decode"}));
  estimate->add_option("--seq", est_seq, "Step sequence length")->needs(step_opt);
  auto* moe_opt = estimate->add_flag("--moe-profile", est_moe_profile,
                                     "Print the sampled expert load profile as CSV");
  estimate->add_option("--tokens", est_tokens, "Routed tokens for --moe-profile")->needs(moe_opt);
  step_opt->excludes(moe_opt);
  mode_opt->excludes(step_opt)->excludes(moe_opt);

  // search
  auto* search = app.add_subcommand("search", "Search the configuration space");
  std::string search_db;
  std::string search_model;
  WorkloadArgs search_workload;
  std::string search_out;
  std::string search_csv;
  unsigned jobs = 0;
  bool timing = false;
  std::size_t cap = 0;
  search->add_option("--db", search_db, "Database")->envname("LLMCONF_DB")->required();
  search->add_option("--model", search_model, "Model spec")->required()->check(CLI::ExistingFile);
  add_workload_options(search, search_workload);
  search->add_option("--out,-o", search_out, "Report path (default stdout)");
  search->add_option("--csv", search_csv, "Also write the frontier as CSV");
  search->add_option("--jobs,-j", jobs, "Worker threads (default: all CPUs)");
  search->add_flag("--timing", timing, "Include timing in the report");
  search->add_option("--max-candidates", cap, "Refuse spaces larger than this (0 = no limit)");

  // generate
  auto* generate = app.add_subcommand("generate", "Emit a launch plan for a report entry");
  std::string gen_report;
  std::string gen_from = "best";
  std::size_t gen_index = 0;
  std::string gen_backend;
  std::string gen_version;
  std::string gen_out;
  std::string gen_profiles;
  generate->add_option("--report", gen_report, "Search report")->required()->check(CLI::ExistingFile);
  generate->add_option("--from", gen_from, "best | frontier")
      ->check(CLI::IsMember({"best", "frontier"}));
  generate->add_option("--index", gen_index, "Entry index");
  generate->add_option("--backend", gen_backend, "Backend (default: the report's)");
  generate->add_option("--version-of-backend,--backend-version", gen_version,
                       "Backend version (default: latest profile)");
  generate->add_option("--profiles", gen_profiles, "Backend profile directory")
      ->check(CLI::ExistingDirectory);
  generate->add_option("--out,-o", gen_out, "launch.yaml path (default stdout)");

  // serve
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  std::string serve_config;
  std::vector<std::string> serve_dbs;
  std::vector<std::string> serve_models;
  std::string serve_bind = "127.0.0.1";
  int serve_port = 8080;
  std::string serve_static;
  std::string serve_profiles;
  auto* cfg_opt = serve->add_option("--config", serve_config, "Service config file")
                      ->check(CLI::ExistingFile);
  auto* sdb_opt = serve->add_option("--db", serve_dbs, "Database as id=path (repeatable)");
  auto* smodel_opt = serve->add_option("--model", serve_models, "Model as id=path (repeatable)");
  cfg_opt->excludes(sdb_opt)->excludes(smodel_opt);
  serve->add_option("--bind", serve_bind, "Bind address");
  serve->add_option("--port", serve_port, "Port")->check(CLI::Range(1, 65535));
  serve->add_option("--static", serve_static, "Directory served at /")
      ->check(CLI::ExistingDirectory);
  serve->add_option("--profiles", serve_profiles, "Backend profile directory")
      ->check(CLI::ExistingDirectory);
  serve->add_option("--jobs,-j", jobs, "Worker threads per search");

  // export
  auto* exportc = app.add_subcommand("export", "Convert a report to frontier CSV");
  std::string export_report;
  std::string export_out;
  exportc->add_option("--report", export_report, "Search report")
      ->required()
      ->check(CLI::ExistingFile);
  exportc->add_option("--out,-o", export_out, "CSV path (default stdout)");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "llmconf: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  try {
    if (dbgen->parsed()) {
      const HardwareSpec hw = load_hardware(hw_path);
      GridSpec spec;
      if (!grid_path.empty()) {
        spec = load_grid_spec(grid_path);
      } else if (!dbgen_models.empty()) {
        std::vector<ModelSpec> models;
        for (const auto& m : dbgen_models) models.push_back(load_model(m));
        const WorkloadSpec w = dbgen_workload.load();
        spec = derive_grid_spec(models, space_configs(w.space));
      } else {
        err << "llmconf: dbgen needs --grid or --model\n";
        return kExitUsage;
      }
      synth.constant_latency_us = constant_latency;
      const DbContents contents = synthesize(hw, spec, seed, synth);
      std::ostringstream os;
      write_db(os, contents);
      write_file(dbgen_out, os.str());
      err << "dbgen: wrote " << contents.records.size() << " records to " << dbgen_out << "\n";
      return kExitOk;
    }

    if (dbcheck->parsed()) {
      const DbContents contents = read_db(std::filesystem::path(check_db));
      std::vector<OperatorQuery> required;
      if (!check_models.empty()) {
        const WorkloadSpec w = check_workload.load();
        const StepShape probe = StepShape::mixed(1, 1, 1, 1);
        for (const auto& path : check_models) {
          const ModelSpec m = load_model(path);
          for (const auto& cfg : space_configs(w.space)) {
            if (!is_consistent(m, cfg)) continue;
            for (const auto& e : decompose(m, cfg, probe).entries) required.push_back(e.query);
          }
        }
      }
      const ValidationReport report = validate_db(contents, required);
      const json j{{"ok", report.ok()},
                   {"records", contents.records.size()},
                   {"violations", findings_json(report.violations)},
                   {"gaps", findings_json(report.gaps)}};
      out << j.dump(2) << "\n";
      if (!report.ok()) {
        err << "dbcheck: " << report.violations.size() << " violations, " << report.gaps.size()
            << " gaps\n";
        return kExitDomainError;
      }
      return kExitOk;
    }

    if (estimate->parsed()) {
      const PerfDatabase db = load_db(est_db);
      const ModelSpec model = load_model(est_model);
      const WorkloadSpec w = est_workload.load();
      ParallelConfig cfg = est_cfg;
      if (ctx_opt->count() == 0) cfg.ctx_capacity = w.space.ctx_capacity;
      if (chunk_opt->count() == 0) cfg.chunked_prefill = w.space.chunked_prefill;
      cfg.kv_mem_fraction = w.space.kv_mem_fraction;
      cfg.cuda_graph = w.space.cuda_graph;
      cfg.backend = w.space.backend;
      check_consistency(model, cfg);
      const InferenceSession session(db, model, cfg, estimator_options(w));
      if (est_moe_profile) {
        if (!model.moe) throw ConfigError("model " + model.name + " has no MoE layers");
        const auto weights = sample_weights(model.moe->num_experts, w.moe_load);
        const std::int64_t tokens = est_tokens.value_or(std::int64_t{cfg.batch} * cfg.dp);
        out << profile_csv(tokens_per_expert(weights, tokens, model.moe->topk), cfg.ep);
        return kExitOk;
      }
      if (!est_step.empty()) {
        const Phase phase = parse_phase(est_step);
        const std::int64_t seq = est_seq > 0 ? est_seq : w.isl;
        out << step_json(session.get_step_latency(cfg.batch, seq, phase), phase, cfg.batch, seq)
                   .dump(2)
            << "\n";
        return kExitOk;
      }
      const PerfEstimate e = est_mode == "static" ? estimate_static(session, w)
                                                  : estimate_aggregated(session, w);
      json j = to_json(e);
      j["config"] = to_json(cfg);
      out << j.dump(2) << "\n";
      return kExitOk;
    }

    if (search->parsed()) {
      const PerfDatabase db = load_db(search_db);
      const ModelSpec model = load_model(search_model);
      const WorkloadSpec w = search_workload.load();
      SearchOptions options;
      options.jobs = jobs;
      options.candidate_cap = cap;
      const SearchResult result = run_search(db, model, w, options);
      const json report = report_json(result, ReportOptions{.include_timing = timing});
      emit(dump_report(report), search_out, out);
      if (!search_csv.empty()) write_file(search_csv, frontier_csv(report));
      err << "search: " << result.timing.candidates << " candidates, " << result.points.size()
          << " points, " << result.frontier.size() << " on the frontier, "
          << result.skipped.size() << " skipped\n";
      err << "search: total " << format_ms(result.timing.total_ms)
          << " ms, per-candidate median " << format_ms(result.timing.per_candidate_median_ms)
          << " ms\n";
      if (result.best.ranked.empty()) {
        err << "search: no configuration meets the SLA";
        if (!result.best.diagnostics.empty()) {
          err << "; nearest miss: " << result.best.diagnostics.front().reason;
        }
        err << "\n";
      }
      return kExitOk;
    }

    if (generate->parsed()) {
      const json report = detail::read_json_file(gen_report);
      const json& list = report.at(gen_from);
      if (!list.is_array() || gen_index >= list.size()) {
        throw NotFoundError("report has no " + gen_from + " entry " + std::to_string(gen_index));
      }
      const ParetoPoint point = point_from_json(list[gen_index]);
      const std::string backend =
          gen_backend.empty() ? report.at("backend").get<std::string>() : gen_backend;
      const ProfileRegistry profiles =
          load_profiles(gen_profiles.empty() ? default_profile_dir()
                                       : std::filesystem::path(gen_profiles));
      const BackendProfile& profile =
          gen_version.empty() ? profiles.latest(backend) : profiles.find(backend, gen_version);
      emit(emit_launch(point, report.at("model").get<std::string>(), profile), gen_out, out);
      return kExitOk;
    }

    if (serve->parsed()) {
      ServiceConfig config;
      if (!serve_config.empty()) {
        config = load_service_config(serve_config);
      } else {
        config.backends_dir = default_profile_dir();
        for (const auto& b : serve_dbs) config.databases.insert(split_binding(b));
        for (const auto& b : serve_models) config.models.insert(split_binding(b));
      }
      if (!serve_profiles.empty()) config.backends_dir = serve_profiles;
      if (!serve_static.empty()) config.static_dir = serve_static;
      if (jobs != 0) config.jobs = jobs;
      const auto service = Service::from_config(config);
      err << "serve: listening on " << serve_bind << ":" << serve_port << "\n";
      run_http_server(*service, serve_bind, serve_port, config.static_dir);
      return kExitOk;
    }

    if (exportc->parsed()) {
      json report;
      try {
        report = json::parse(read_file(export_report));
      } catch (const json::parse_error& e) {
        throw ParseError(export_report + ": " + e.what());
      }
      emit(frontier_csv(report), export_out, out);
      return kExitOk;
    }
  } catch (const CLI::ValidationError& e) {
    err << "llmconf: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "llmconf: error: " << e.what() << "\n";
    return kExitDomainError;
  } catch (const json::exception& e) {
    err << "llmconf: error: " << e.what() << "\n";
    return kExitDomainError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "llmconf: error: " << e.what() << "\n";
    return kExitDomainError;
  }
  return kExitUsage;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  return run_cli(std::vector<std::string>(argv, argv + argc), out, err);
}

}  // namespace llmconf
