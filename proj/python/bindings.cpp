// Copyright (c) 2026 The llmconf Authors.
// SPDX-License-Identifier: Apache-2.0

#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "llmconf/cli.hpp"
#include "llmconf/error.hpp"
#include "llmconf/generator.hpp"
#include "llmconf/moe_load.hpp"
#include "llmconf/report.hpp"
#include "llmconf/search.hpp"
#include "llmconf/serving.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

llmconf::OperatorQuery make_query(const std::string& kind, const std::string& quant,
                                  const std::map<std::string, std::int64_t>& dims,
                                  const std::optional<std::string>& attn) {
  llmconf::OperatorQuery q;
  q.kind = llmconf::parse_op_kind(kind);
  q.quant = llmconf::parse_quant(quant);
  for (const auto& [name, v] : dims) q.shape.set(llmconf::parse_dim(name), v);
  if (attn) q.shape.set_attn(llmconf::parse_attn_kind(*attn));
  return q;
}

std::string search_json(const std::string& db_path, const std::string& model_path,
                        const std::string& workload_json, unsigned jobs, bool timing) {
  const auto db = llmconf::load_db(db_path);
  const auto model = llmconf::load_model(model_path);
  const auto w = llmconf::workload_from_json(json::parse(workload_json));
  llmconf::SearchOptions options;
  options.jobs = jobs;
  const auto result = llmconf::run_search(db, model, w, options);
  return llmconf::dump_report(
      llmconf::report_json(result, llmconf::ReportOptions{.include_timing = timing}));
}

std::string generate_yaml(const std::string& entry_json, const std::string& model,
                          const std::string& backend, const std::string& version,
                          const std::string& profile_dir) {
  const auto registry = llmconf::load_profiles(
      profile_dir.empty() ? llmconf::default_profile_dir() : std::filesystem::path(profile_dir));
  const auto& profile = version.empty() ? registry.latest(backend) : registry.find(backend, version);
  return llmconf::emit_launch(llmconf::point_from_json(json::parse(entry_json)), model, profile);
}

std::tuple<int, std::string, std::string> run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "llmconf");
  std::ostringstream out;
  std::ostringstream err;
  const int code = llmconf::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

PYBIND11_MODULE(_llmconf, m) {
  m.doc() = "LLM serving configuration search";

  py::register_exception<llmconf::Error>(m, "Error");

  m.def("derive_metrics",
        [](double ttft, double tpot, std::int64_t osl, std::int64_t batch, int gpus) {
          const auto mt = llmconf::derive_metrics(ttft, tpot, osl, batch, gpus);
          return std::make_pair(mt.speed, mt.throughput_per_gpu);
        },
        py::arg("ttft_ms"), py::arg("tpot_ms"), py::arg("osl"), py::arg("batch"), py::arg("gpus"),
        "(speed tokens/s/user, throughput tokens/s/GPU)");
  m.def("ttft_correction",
        [](std::int64_t steps) { return llmconf::ttft_correction(steps); }, py::arg("steps"));
  m.def("aggregated_schedule",
        [](std::int64_t batch, std::int64_t isl, std::int64_t osl, std::int64_t capacity) {
          const auto s = llmconf::aggregated_schedule(batch, isl, osl, capacity);
          py::dict d;
          d["total_ctx_steps"] = s.total_ctx_steps;
          d["context_dominant"] = s.context_dominant;
          d["mix_steps"] = s.mix_steps;
          d["gen_steps"] = s.gen_steps;
          d["mix_ctx_tokens"] = s.mix_ctx_tokens;
          d["mix_gen_tokens"] = s.mix_gen_tokens;
          return d;
        },
        py::arg("batch"), py::arg("isl"), py::arg("osl"), py::arg("ctx_capacity"));

  m.def("sample_weights",
        [](int experts, double alpha, double x_min, double x_max, std::uint64_t seed) {
          return llmconf::sample_weights(experts, llmconf::PowerLawParams{alpha, x_min, x_max, seed});
        },
        py::arg("experts"), py::arg("alpha") = 1.2, py::arg("x_min") = 1.0,
        py::arg("x_max") = 100.0, py::arg("seed") = 0);
  m.def("tokens_per_expert",
        [](const std::vector<double>& weights, std::int64_t tokens, int topk) {
          return llmconf::tokens_per_expert(weights, tokens, topk).tokens_per_expert;
        },
        py::arg("weights"), py::arg("tokens"), py::arg("topk"));

  m.def("pareto_indices", [](const std::vector<std::pair<double, double>>& pts) {
    return llmconf::pareto_indices(pts);
  }, py::arg("points"), "Indices of non-dominated (speed, throughput) points");

  py::class_<llmconf::PerfDatabase>(m, "PerfDatabase")
      .def_static("load", [](const std::string& path) { return llmconf::load_db(path); })
      .def_property_readonly("hardware",
                             [](const llmconf::PerfDatabase& db) { return db.hardware().name; })
      .def_property_readonly("backend", &llmconf::PerfDatabase::backend)
      .def_property_readonly("records",
                             [](const llmconf::PerfDatabase& db) { return db.records().size(); })
      .def("query_latency",
           [](const llmconf::PerfDatabase& db, const std::string& kind, const std::string& quant,
              const std::map<std::string, std::int64_t>& dims,
              const std::optional<std::string>& attn) {
             return db.query_latency(make_query(kind, quant, dims, attn));
           },
           py::arg("kind"), py::arg("quant"), py::arg("dims"), py::arg("attn") = py::none(),
           "Latency in microseconds");

  m.def("search_json", &search_json, py::arg("db"), py::arg("model"), py::arg("workload"),
        py::arg("jobs") = 0, py::arg("timing") = false);
  m.def("generate_yaml", &generate_yaml, py::arg("entry"), py::arg("model"),
        py::arg("backend") = "trtllm", py::arg("version") = "", py::arg("profiles") = "");
  m.def("run_cli", &run_cli, py::arg("args"), "(exit code, stdout, stderr)");
}
