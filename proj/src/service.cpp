// Copyright (c) 2026 The llmconf Authors.
// SPDX-License-Identifier: Apache-2.0

#include "llmconf/service.hpp"

#include <algorithm>
#include <mutex>

#include <httplib.h>

#include "json_util.hpp"
#include "llmconf/report.hpp"

namespace llmconf {

using nlohmann::json;

namespace {

HttpResponse json_response(int status, const json& body) {
  return HttpResponse{status, "application/json", body.dump(2) + "\n"};
}

HttpResponse error_response(int status, const std::string& message) {
  return json_response(status, json{{"error", message}});
}

// Maps domain errors onto HTTP statuses.
template <typename Fn>
HttpResponse guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const NotFoundError& e) {
    return error_response(404, e.what());
  } catch (const CapacityError& e) {
    return error_response(413, e.what());
  } catch (const InfeasibleError& e) {
    return error_response(422, e.what());
  } catch (const Error& e) {
    return error_response(400, e.what());
  } catch (const json::exception& e) {
    return error_response(400, e.what());
  }
}

json parse_body(const std::string& body) {
  try {
    json j = json::parse(body);
    detail::require_object(j, "request");
    return j;
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("request: malformed JSON: ") + e.what());
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace

ServiceConfig load_service_config(const std::filesystem::path& path) {
  const json j = detail::read_document(path);
  constexpr std::string_view where = "service config";
  detail::reject_unknown_keys(
      j, {"databases", "models", "backends", "static_dir", "candidate_cap", "jobs"}, where);
  const std::filesystem::path base = path.parent_path();
  ServiceConfig c;
  for (const char* key : {"databases", "models"}) {
    if (!j.contains(key)) continue;
    detail::require_object(j[key], std::string(where) + "." + key);
    auto& target = std::string_view(key) == "databases" ? c.databases : c.models;
    for (const auto& [id, p] : j[key].items()) {
      if (!p.is_string()) throw ParseError(std::string(where) + "." + key + "." + id + ": expected a path");
      target[id] = resolve(base, p.get<std::string>());
    }
  }
  c.backends_dir = j.contains("backends")
                       ? resolve(base, detail::get_as<std::string>(j, "backends", where))
                       : default_profile_dir();
  if (j.contains("static_dir")) {
    c.static_dir = resolve(base, detail::get_as<std::string>(j, "static_dir", where));
  }
  c.candidate_cap = detail::get_or<std::size_t>(j, "candidate_cap", c.candidate_cap, where);
  c.jobs = detail::get_or<unsigned>(j, "jobs", c.jobs, where);
  return c;
}

Service::Service(ProfileRegistry profiles, std::size_t candidate_cap, unsigned jobs)
    : profiles_(std::move(profiles)), candidate_cap_(candidate_cap), jobs_(jobs) {}

std::unique_ptr<Service> Service::from_config(const ServiceConfig& config) {
  auto s = std::make_unique<Service>(load_profiles(config.backends_dir), config.candidate_cap,
                                     config.jobs);
  for (const auto& [id, path] : config.databases) s->add_database(id, load_db(path));
  for (const auto& [id, path] : config.models) s->add_model(id, load_model(path));
  return s;
}

void Service::add_database(const std::string& id, PerfDatabase db) {
  std::unique_lock lock(mu_);
  dbs_[id] = std::make_shared<const PerfDatabase>(std::move(db));
}

void Service::add_model(const std::string& id, ModelSpec model) {
  validate(model);
  std::unique_lock lock(mu_);
  models_.insert_or_assign(id, std::move(model));
}

HttpResponse Service::meta() const {
  std::shared_lock lock(mu_);
  json dbs = json::array();
  json hardware = json::array();
  for (const auto& [id, db] : dbs_) {
    dbs.push_back(json{{"id", id},
                       {"hardware", db->hardware().name},
                       {"backend", db->backend()},
                       {"backend_version", db->backend_version()},
                       {"records", db->records().size()},
                       {"grids", db->grid_count()}});
    if (std::find(hardware.begin(), hardware.end(), db->hardware().name) == hardware.end()) {
      hardware.push_back(db->hardware().name);
    }
  }
  json models = json::array();
  for (const auto& [id, m] : models_) {
    models.push_back(json{{"id", id},
                          {"name", m.name},
                          {"moe", m.moe.has_value()},
                          {"attn_kind", std::string(to_string(m.attn_kind))},
                          {"param_count", m.param_count}});
  }
  json backends = json::array();
  for (const auto& [backend, version] : profiles_.keys()) {
    backends.push_back(json{{"backend", backend}, {"version", version}});
  }
  return json_response(200, json{{"databases", std::move(dbs)},
                                 {"models", std::move(models)},
                                 {"hardware", std::move(hardware)},
                                 {"backends", std::move(backends)}});
}

HttpResponse Service::search(const std::string& body) const {
  return guarded([&] {
    json req = parse_body(body);
    detail::reject_unknown_keys(req, {"db", "model", "workload", "space"}, "request");
    const std::string db_id = detail::get_as<std::string>(req, "db", "request");
    const json& model_ref = detail::require_field(req, "model", "request");

    std::shared_ptr<const PerfDatabase> db;
    ModelSpec model;
    {
      std::shared_lock lock(mu_);
      auto it = dbs_.find(db_id);
      if (it == dbs_.end()) throw NotFoundError("unknown database '" + db_id + "'");
      db = it->second;
      if (model_ref.is_string()) {
        auto mit = models_.find(model_ref.get<std::string>());
        if (mit == models_.end()) {
          throw NotFoundError("unknown model '" + model_ref.get<std::string>() + "'");
        }
        model = mit->second;
      }
    }
    if (model_ref.is_object()) {
      model = model_from_json(model_ref);
    } else if (!model_ref.is_string()) {
      throw ParseError("request.model: expected a model id or an inline model");
    }

    json wdoc = req.contains("workload") ? req["workload"] : json::object();
    if (req.contains("space")) {
      detail::require_object(req["space"], "request.space");
      if (!wdoc.is_object()) throw ParseError("workload: expected a JSON object");
      wdoc["space"].merge_patch(req["space"]);
    }
    const WorkloadSpec w = workload_from_json(wdoc);

    SearchOptions options;
    options.jobs = jobs_;
    options.candidate_cap = candidate_cap_;
    const SearchResult result = run_search(*db, model, w, options);
    json report = report_json(result, ReportOptions{.include_timing = true});
    if (result.best.ranked.empty()) {
      report["error"] = "no configuration meets the SLA";
      return json_response(422, report);
    }
    return json_response(200, report);
  });
}

HttpResponse Service::generate(const std::string& body) const {
  return guarded([&] {
    json req = parse_body(body);
    detail::reject_unknown_keys(req, {"entry", "model", "backend", "version"}, "request");
    const ParetoPoint point = point_from_json(detail::require_field(req, "entry", "request"));
    const std::string model = detail::get_as<std::string>(req, "model", "request");
    const std::string backend = detail::get_or<std::string>(req, "backend", "trtllm", "request");
    const BackendProfile& profile =
        req.contains("version")
            ? profiles_.find(backend, detail::get_as<std::string>(req, "version", "request"))
            : profiles_.latest(backend);
    return HttpResponse{200, "application/yaml", emit_launch(point, model, profile)};
  });
}

HttpResponse Service::handle(const std::string& method, const std::string& path,
                             const std::string& body) const {
  if (path == "/api/v1/meta" && method == "GET") return meta();
  if (path == "/api/v1/search" && method == "POST") return search(body);
  if (path == "/api/v1/generate" && method == "POST") return generate(body);
  if (path == "/api/v1/meta" || path == "/api/v1/search" || path == "/api/v1/generate") {
    return error_response(405, "method not allowed");
  }
  return error_response(404, "no route for " + path);
}

void run_http_server(const Service& service, const std::string& bind, int port,
                     const std::optional<std::filesystem::path>& static_dir) {
  httplib::Server server;
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                              {"Access-Control-Allow-Headers", "Content-Type"}});
  auto forward = [&service](const httplib::Request& req, httplib::Response& res) {
    const HttpResponse r = service.handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  server.Get("/api/v1/meta", forward);
  server.Post("/api/v1/search", forward);
  server.Post("/api/v1/generate", forward);
  server.Options(R"(/api/v1/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.status = 204;
  });
  if (static_dir && !server.set_mount_point("/", static_dir->string())) {
    throw NotFoundError("static directory " + static_dir->string() + " does not exist");
  }
  if (!server.listen(bind, port)) {
    throw Error("cannot listen on " + bind + ":" + std::to_string(port));
  }
}

}  // namespace llmconf
