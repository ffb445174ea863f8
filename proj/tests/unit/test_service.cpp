#include <doctest.h>

#include <httplib.h>

#include "learnrec/error.hpp"
#include "learnrec/evaluator.hpp"
#include "learnrec/io.hpp"
#include "learnrec/service.hpp"
#include "learnrec/synth.hpp"

using namespace learnrec;
using nlohmann::json;
using service::QueryParams;
using service::Service;

namespace {

struct Fixture {
  store::Store store;
  profiles::ProfileRegistry registry;
  Service svc{store, registry};

  Fixture() {
    svc.handle_ingest("interactions", "text/csv",
                      "user_id,resource_id,timestamp_ms,kind\n"
                      "u1,r1,1,click\nu1,r2,2,click\nu2,r1,3,click\nu2,r2,4,click\nu2,r3,5,click\nu3,r4,6,click\n");
    svc.handle_ingest("resources", "application/x-ndjson",
                      "{\"resource_id\":\"r1\",\"title\":\"Rios\",\"description\":\"Rios de Europa.\"}\n"
                      "{\"resource_id\":\"r5\",\"title\":\"Rios\",\"description\":\"Rios de Europa.\"}\n");
    store.refresh();
  }
};

void check_response_schema(const json& body) {
  REQUIRE(body.contains("items"));
  CHECK(body["items"].is_array());
  CHECK(body["algorithm_id"].is_string());
  CHECK(body["profile_version"].is_number_unsigned());
  CHECK(body["cold_start"].is_boolean());
  CHECK(body["elapsed_ms"].get<double>() >= 0.0);
  if (body["cold_start"].get<bool>()) CHECK(body["items"].empty());
  double prev = 1e300;
  std::size_t rank = 1;
  for (const auto& item : body["items"]) {
    CHECK(item["rank"].get<std::size_t>() == rank++);
    CHECK(item["score"].get<double>() <= prev);
    prev = item["score"].get<double>();
  }
}

}  // namespace

TEST_CASE("ingest counts accepted and rejected records") {
  store::Store st;
  profiles::ProfileRegistry reg;
  Service svc(st, reg);
  auto r = svc.handle_ingest("interactions", "text/csv",
                             "user_id,resource_id,timestamp_ms,kind\nu1,r1,1,click\nu2,r1,2,click\nu3,r2,3,click\n");
  CHECK(r.status == 200);
  CHECK(r.body["accepted"] == 3);
  CHECK(r.body["rejected"] == 0);

  r = svc.handle_ingest("interactions", "text/csv",
                        "user_id,resource_id,timestamp_ms,kind\nu1,r1,1,click\n,r1,2,click\nu3,r2,3,click\n");
  CHECK(r.body["accepted"] == 2);
  CHECK(r.body["rejected"] == 1);
  CHECK(r.body["errors"][0]["line"] == 3);

  r = svc.handle_ingest("interactions", "application/json",
                        R"([{"user_id":"a","resource_id":"b","timestamp_ms":1},{"user_id":"a","timestamp_ms":2}])");
  CHECK(r.body["accepted"] == 1);
  CHECK(r.body["rejected"] == 1);

  const std::string line = "{\"resource_id\":\"r1\",\"title\":\"t\"}\n";
  svc.handle_ingest("resources", "application/x-ndjson", line);
  const auto before = svc.handle_stats().body["n_resources"];
  r = svc.handle_ingest("resources", "application/x-ndjson", line);
  CHECK(r.body["accepted"] == 1);
  st.refresh();
  CHECK(svc.handle_stats().body["n_resources"] == before);

  CHECK(svc.handle_ingest("interactions", "text/csv", "wrong,header\n").status == 400);
  CHECK(svc.handle_ingest("tags", "application/json", "{not json").status == 400);
  CHECK(svc.handle_ingest("tags", "application/json", R"({"x": 1})").status == 400);
  CHECK(svc.handle_ingest("ratings", "text/csv", "").status == 404);
}

TEST_CASE("recommendation routes") {
  Fixture f;
  auto r = f.svc.handle_recommend("popular", {{"k", "20"}});
  CHECK(r.status == 200);
  check_response_schema(r.body);
  CHECK(r.body["items"][0]["resource_id"] == "r1");
  CHECK(r.body["cold_start"] == false);

  r = f.svc.handle_recommend("cf", {{"user", "u1"}});
  CHECK(r.status == 200);
  check_response_schema(r.body);
  CHECK(r.body["items"][0]["resource_id"] == "r3");

  r = f.svc.handle_recommend("cf", {{"user", "unknown"}});
  CHECK(r.status == 200);
  CHECK(r.body["items"].empty());
  CHECK(r.body["cold_start"] == true);

  CHECK(f.svc.handle_recommend("similar", {{"resource", "missing"}}).status == 404);
  r = f.svc.handle_recommend("similar", {{"resource", "r1"}});
  CHECK(r.status == 200);
  CHECK(r.body["items"][0]["resource_id"] == "r5");

  CHECK(f.svc.handle_recommend("cf", {{"user", "u1"}, {"k", "0"}}).status == 422);
  CHECK(f.svc.handle_recommend("cf", {{"user", "u1"}, {"k", "abc"}}).status == 422);
  CHECK(f.svc.handle_recommend("cf", {{"user", "u1"}, {"signal", "likes"}}).status == 422);
  CHECK(f.svc.handle_recommend("goal", {{"user", "u1"}, {"lambda", "2"}}).status == 422);
  CHECK(f.svc.handle_recommend("goal", {{"user", "u1"}, {"goal", "faster"}}).status == 422);
  CHECK(f.svc.handle_recommend("cf", {}).status == 422);
  CHECK(f.svc.handle_recommend("contextual", {{"user", "u1"}, {"resource", "nope"}}).status == 404);
  CHECK(f.svc.handle_recommend("teleport", {}).status == 404);

  for (const auto& [route, params] : std::vector<std::pair<std::string, QueryParams>>{
           {"cbf", {{"user", "u1"}}},
           {"contextual", {{"user", "u1"}, {"resource", "r1"}}},
           {"goal", {{"user", "u1"}, {"goal", "topic:rios"}, {"lambda", "0.3"}}},
           {"cf", {{"user", "u1"}, {"signal", "tags"}}}}) {
    r = f.svc.handle_recommend(route, params);
    CHECK(r.status == 200);
    check_response_schema(r.body);
  }
}

TEST_CASE("service adds no reordering") {
  Fixture f;
  const engine::Engine e(f.store.snapshot());
  const auto direct = e.recommend_popular(20);
  const auto body = f.svc.handle_recommend("popular", {{"k", "20"}}).body;
  REQUIRE(body["items"].size() == direct.size());
  for (std::size_t i = 0; i < direct.size(); ++i) {
    CHECK(body["items"][i]["resource_id"] == direct.entries[i].resource_id);
    CHECK(body["items"][i]["score"].get<double>() == direct.entries[i].score);
  }
}

TEST_CASE("profile admin") {
  Fixture f;
  auto r = f.svc.handle_put_profile("cf-default", R"({"n": 5})");
  CHECK(r.status == 200);
  r = f.svc.handle_get_profile("cf-default");
  CHECK(r.body["n"] == 5);
  CHECK(r.body["version"] == 2);

  r = f.svc.handle_put_profile("cf-default", R"({"lambda": 2})");
  CHECK(r.status == 422);
  CHECK(f.svc.handle_get_profile("cf-default").body["version"] == 2);
  CHECK(f.svc.handle_put_profile("cf-default", "nope").status == 400);
  CHECK(f.svc.handle_put_profile("cf-default", R"({"profile_id": "other"})").status == 422);
  CHECK(f.svc.handle_get_profile("nope").status == 404);
  CHECK(f.svc.handle_list_profiles().body["profiles"].is_array());

  const auto rec = f.svc.handle_recommend("cf", {{"user", "u1"}});
  CHECK(rec.body["profile_version"] == 2);
}

TEST_CASE("evaluation runs asynchronously and matches the shared path") {
  store::Store st;
  profiles::ProfileRegistry reg;
  Service svc(st, reg);
  synth::SynthConfig cfg;
  cfg.n_users = 300;
  cfg.n_resources = 60;
  cfg.n_topics = 5;
  const Dataset d = synth::generate_synthetic(cfg);
  st.ingest(d);

  auto r = svc.handle_eval_run(R"({"algorithms": ["uc1", "uc3"]})");
  REQUIRE(r.status == 202);
  const std::string id = r.body["run_id"];
  const auto done = svc.wait_for_run(id, std::chrono::seconds(60));
  REQUIRE(done);
  CHECK((*done)["status"] == "done");
  const auto& rows = (*done)["report"]["rows"];
  REQUIRE(rows.size() == 2);
  CHECK(rows[0]["algorithm_id"] == "uc1");
  CHECK(rows[1]["algorithm_id"] == "uc3");

  eval::EvalConfig config;
  config.algorithms = {profiles::Algorithm::popular, profiles::Algorithm::cf_tags};
  CHECK((*done)["report"]["csv"] == eval::to_csv(eval::run_evaluation(st.snapshot().export_dataset(), config, reg)));
  CHECK(svc.handle_eval_status(id).status == 200);
  CHECK(svc.handle_eval_status("999").status == 404);
  CHECK(svc.handle_eval_run(R"({"algorithms": ["uc9"]})").status == 422);
  CHECK(svc.handle_eval_run(R"({"test_fraction": 1.5})").status == 422);
  CHECK(svc.handle_eval_run(R"({"dataset": {"dir": "/nonexistent/dir"}})").status == 422);
  CHECK(svc.handle_eval_run("[").status == 400);
}

TEST_CASE("config from environment") {
  setenv("LEARNREC_PORT", "9191", 1);
  setenv("LEARNREC_REFRESH_MS", "250", 1);
  auto c = service::ServiceConfig::from_env();
  CHECK(c.port == 9191);
  CHECK(c.refresh_bound == std::chrono::milliseconds(250));
  setenv("LEARNREC_PORT", "http", 1);
  CHECK_THROWS_AS(service::ServiceConfig::from_env(), ValidationError);
  unsetenv("LEARNREC_PORT");
  unsetenv("LEARNREC_REFRESH_MS");
}

TEST_CASE("http round trip") {
  store::Store st(store::StoreOptions{std::chrono::milliseconds(100)});
  profiles::ProfileRegistry reg;
  Service svc(st, reg);
  service::ServiceConfig cfg;
  cfg.host = "127.0.0.1";
  cfg.port = 0;
  cfg.refresh_bound = std::chrono::milliseconds(100);
  service::HttpServer server(svc, cfg);
  server.start();
  httplib::Client cli("127.0.0.1", server.port());

  auto res = cli.Get("/health");
  REQUIRE(res);
  CHECK(res->status == 200);

  res = cli.Post("/data/interactions", "user_id,resource_id,timestamp_ms,kind\nu1,r1,1,click\nu2,r1,2,click\n",
                 "text/csv");
  REQUIRE(res);
  CHECK(json::parse(res->body)["accepted"] == 2);

  bool visible = false;
  const auto start = std::chrono::steady_clock::now();
  while (std::chrono::steady_clock::now() - start < std::chrono::seconds(2)) {
    res = cli.Get("/rec/popular?k=5");
    if (res && !json::parse(res->body)["items"].empty()) {
      visible = true;
      break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  CHECK(visible);

  res = cli.Get("/rec/similar?resource=missing");
  REQUIRE(res);
  CHECK(res->status == 404);
  res = cli.Put("/admin/profiles/cf-default", R"({"n": 3})", "application/json");
  REQUIRE(res);
  CHECK(json::parse(res->body)["version"] == 2);
  res = cli.Get("/admin/profiles/cf-default");
  REQUIRE(res);
  CHECK(json::parse(res->body)["n"] == 3);
  res = cli.Get("/stats");
  REQUIRE(res);
  CHECK(json::parse(res->body)["n_interactions"] == 2);
  server.stop();
}
