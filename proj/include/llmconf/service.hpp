// Copyright (c) 2026 The llmconf Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>

#include <nlohmann/json.hpp>

#include "llmconf/generator.hpp"
#include "llmconf/perfdb.hpp"
#include "llmconf/search.hpp"

namespace llmconf {

struct HttpResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

// Resources loaded at startup. JSON form:
// {"databases": {id: path}, "models": {id: path}, "backends": dir,
//  "static_dir": dir, "candidate_cap": n, "jobs": n}
struct ServiceConfig {
  std::map<std::string, std::filesystem::path> databases;
  std::map<std::string, std::filesystem::path> models;
  std::filesystem::path backends_dir;
  std::optional<std::filesystem::path> static_dir;
  std::size_t candidate_cap = 10000;
  unsigned jobs = 0;
};

// Relative paths resolve against the config file's directory.
ServiceConfig load_service_config(const std::filesystem::path& path);

// Request handlers over shared, immutable databases. Resource registration
// may run concurrently with requests.
class Service {
 public:
  Service(ProfileRegistry profiles, std::size_t candidate_cap = 10000, unsigned jobs = 0);
  static std::unique_ptr<Service> from_config(const ServiceConfig& config);

  void add_database(const std::string& id, PerfDatabase db);
  void add_model(const std::string& id, ModelSpec model);

  // GET /api/v1/meta
  HttpResponse meta() const;
  // POST /api/v1/search
  HttpResponse search(const std::string& body) const;
  // POST /api/v1/generate
  HttpResponse generate(const std::string& body) const;

  // Routes by method and path; 404 for anything else.
  HttpResponse handle(const std::string& method, const std::string& path,
                      const std::string& body) const;

 private:
  mutable std::shared_mutex mu_;
  std::map<std::string, std::shared_ptr<const PerfDatabase>> dbs_;
  std::map<std::string, ModelSpec> models_;
  ProfileRegistry profiles_;
  std::size_t candidate_cap_;
  unsigned jobs_;
};

// Blocks serving `service` until the process is stopped. Adds CORS headers
// and mounts `static_dir` at "/" when given.
void run_http_server(const Service& service, const std::string& bind, int port,
                     const std::optional<std::filesystem::path>& static_dir);

}  // namespace llmconf
