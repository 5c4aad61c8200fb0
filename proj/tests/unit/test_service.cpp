// Copyright (c) 2026 The llmconf Authors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <chrono>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <unistd.h>

#include "llmconf/cli.hpp"
#include "llmconf/report.hpp"
#include "llmconf/service.hpp"
#include "support/golden_points.hpp"

using namespace llmconf;
using nlohmann::json;

namespace {

const Service& service() {
  static const std::unique_ptr<Service> svc = [] {
    auto s = std::make_unique<Service>(load_profiles(testing::data_dir() / "backends"), 2000, 2);
    s->add_database("h100", load_db(testing::bundled_db_path()));
    s->add_model("qwen-small", testing::qwen_small());
    s->add_model("qwen-moe-small", testing::qwen_moe());
    return s;
  }();
  return *svc;
}

json chat_workload() {
  return load_workload_document(testing::data_dir() / "workloads" / "chat.yaml");
}

}  // namespace

TEST_SUITE("service") {
  TEST_CASE("meta lists resources") {
    const auto r = service().handle("GET", "/api/v1/meta", "");
    REQUIRE(r.status == 200);
    const auto j = json::parse(r.body);
    CHECK(j["databases"].size() == 1);
    CHECK(j["models"].size() == 2);
    CHECK(j["backends"].size() == 4);
    CHECK(j["hardware"][0] == "h100_sxm");
  }

  TEST_CASE("fixture search succeeds") {
    const json req{{"db", "h100"}, {"model", "qwen-small"}, {"workload", chat_workload()}};
    const auto r = service().handle("POST", "/api/v1/search", req.dump());
    REQUIRE(r.status == 200);
    const auto j = json::parse(r.body);
    CHECK_FALSE(j["frontier"].empty());
    CHECK_FALSE(j["best"].empty());
    CHECK(j.contains("timing"));
  }

  TEST_CASE("inline model and space override") {
    json req{{"db", "h100"},
             {"model", to_json(testing::qwen_small())},
             {"workload", chat_workload()},
             {"space", {{"tp", {2}}, {"pp", {1}}, {"ep", {1}}, {"dp", {1}}}}};
    const auto r = service().search(req.dump());
    REQUIRE(r.status == 200);
    for (const auto& p : json::parse(r.body)["frontier"]) {
      if (p.contains("config")) CHECK(p["config"]["tp"] == 2);
    }
  }

  TEST_CASE("error statuses") {
    CHECK(service().handle("POST", "/api/v1/search", "{not json").status == 400);
    CHECK(service().search(R"({"db":"h100","model":"qwen-small","bogus":1})").status == 400);
    CHECK(service().search(R"({"db":"nope","model":"qwen-small"})").status == 404);
    CHECK(service().search(R"({"db":"h100","model":"nope"})").status == 404);
    CHECK(service().handle("GET", "/api/v1/nothing", "").status == 404);
    CHECK(service().handle("GET", "/api/v1/search", "").status == 405);

    json big{{"db", "h100"}, {"model", "qwen-small"}, {"workload", chat_workload()}};
    big["workload"]["batch_sweep"] = json::array();
    for (int b = 1; b <= 64; ++b) big["workload"]["batch_sweep"].push_back(b);
    CHECK(service().search(big.dump()).status == 413);

    json impossible{{"db", "h100"}, {"model", "qwen-small"}, {"workload", chat_workload()}};
    impossible["workload"]["ttft_limit"] = 0.001;
    const auto r = service().search(impossible.dump());
    CHECK(r.status == 422);
    const auto j = json::parse(r.body);
    CHECK(j.contains("error"));
    CHECK_FALSE(j["diagnostics"].empty());
  }

  TEST_CASE("generate returns yaml for a frontier entry") {
    const json req{{"entry", to_json(testing::golden_disaggregated_point())},
                   {"model", "Qwen/Qwen2.5-7B-Instruct"},
                   {"backend", "sglang"}};
    const auto r = service().generate(req.dump());
    REQUIRE(r.status == 200);
    CHECK(r.content_type == "application/yaml");
    const bool has_prefill = r.body.find("role: \"prefill\"") != std::string::npos ||
                             r.body.find("role: prefill") != std::string::npos;
    CHECK(has_prefill);

    json tampered = req;
    tampered["entry"]["plan"]["y"] = 7;
    CHECK(service().generate(tampered.dump()).status == 400);
    json unknown = req;
    unknown["backend"] = "tgi";
    CHECK(service().generate(unknown.dump()).status == 404);
  }

  TEST_CASE("cli and api produce the same report bytes") {
    const auto dir = std::filesystem::temp_directory_path() /
                     ("llmconf_svc_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
    const auto out_path = dir / "report.json";
    std::ostringstream out, err;
    const int code = run_cli({"llmconf", "search", "--db", testing::bundled_db_path().string(),
                              "--model", testing::model_path("qwen-small").string(),
                              "--workload",
                              (testing::data_dir() / "workloads" / "chat.yaml").string(),
                              "--out", out_path.string(), "--jobs", "2"},
                             out, err);
    REQUIRE(code == 0);
    const json req{{"db", "h100"}, {"model", "qwen-small"}, {"workload", chat_workload()}};
    auto api = json::parse(service().search(req.dump()).body);
    api.erase("timing");
    CHECK(dump_report(api) == testing::read_text(out_path));
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("http server round trip") {
    const int port = 20000 + static_cast<int>(::getpid() % 20000);
    std::thread([port] { run_http_server(service(), "127.0.0.1", port, std::nullopt); }).detach();
    httplib::Client cli("127.0.0.1", port);
    cli.set_connection_timeout(1);
    httplib::Result res;
    for (int i = 0; i < 50 && !res; ++i) {
      res = cli.Get("/api/v1/meta");
      if (!res) std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(res->get_header_value("Access-Control-Allow-Origin") == "*");
    auto opt = cli.Options("/api/v1/search");
    REQUIRE(opt);
    CHECK(opt->status == 204);
    auto bad = cli.Post("/api/v1/search", "{}", "application/json");
    REQUIRE(bad);
    CHECK(bad->status == 400);
  }
}
