#include "audit/service.hpp"
#include "audit/workspace.hpp"
#include "doctest.h"
#include "support/fixture.hpp"
#include "support/service_harness.hpp"

using namespace audit;
using namespace audit::test;

namespace {

json body_of(const httplib::Result& res) {
  REQUIRE(res);
  return json::parse(res->body);
}

json personas_json() {
  json out = json::array();
  for (const auto& p : reference_personas()) out.push_back(to_json(p));
  return out;
}

void seed_store(const std::filesystem::path& root, const SceneStore& store) {
  Workspace(root).save_store(store);
}

// Builds a sixteen-window collection through the API and returns the run id.
std::string drive_protocol(httplib::Client& c) {
  const json ctx = body_of(c.Post("/queries", R"({"object_filters":[{"class":"person","max_dist_m":10.0}]})",
                                  "application/json"));
  CHECK(!ctx["hits"].empty());
  ScenarioContext context = scenario_context_from_json(ctx);

  auto res = c.Post("/collections", R"({"collection_id":"near-people","name":"near people"})",
                    "application/json");
  REQUIRE(res);
  CHECK(res->status == 201);

  const auto fixture = build_protocol_fixture();
  json anchors = json::array();
  for (const auto& a : promote_hits(context, fixture.store, 16, 3, 3)) anchors.push_back(to_json(a));
  REQUIRE(anchors.size() == 16);
  res = c.Post("/collections/near-people/anchors", json{{"anchors", anchors}}.dump(), "application/json");
  REQUIRE(res);
  CHECK(res->status == 200);

  const json collection =
      body_of(c.Post("/collections/near-people/windows", R"({"k":3,"m":3})", "application/json"));
  CHECK(collection["windows"].size() == 16);

  const json run_request = {{"collection_id", "near-people"},
                            {"models", personas_json()},
                            {"prompt", "fixed_standard"},
                            {"include_images", false}};
  res = c.Post("/runs", run_request.dump(), "application/json");
  REQUIRE(res);
  CHECK(res->status == 202);
  const json accepted = json::parse(res->body);
  CHECK(accepted["state"] == "queued");
  return accepted["run_id"].get<std::string>();
}

}  // namespace

TEST_SUITE("service") {
  TEST_CASE("an empty store lists no acquisitions") {
    TempDir dir("svc-empty");
    seed_store(dir.path(), SceneStore{});
    ServiceHarness h(dir.path());
    auto c = h.client();
    auto res = c.Get("/acquisitions");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(res->body == "[]");
  }

  TEST_CASE("states and acquisitions reflect the store") {
    TempDir dir("svc-states");
    seed_store(dir.path(), store_of(run_of("A", 97, 103)));
    ServiceHarness h(dir.path());
    auto c = h.client();
    const json acq = body_of(c.Get("/acquisitions"));
    CHECK(acq == json::parse(R"([{"acq":"A","t_min":97,"t_max":103,"states":7}])"));
    CHECK(body_of(c.Get("/acquisitions/A/states")).size() == 7);
    CHECK(body_of(c.Get("/acquisitions/A/states?from=99&to=101")).size() == 3);
    auto res = c.Get("/acquisitions/B/states");
    REQUIRE(res);
    CHECK(res->status == 404);
    CHECK(json::parse(res->body)["code"] == "not_found");
    res = c.Get("/acquisitions/A/states?from=x");
    REQUIRE(res);
    CHECK(res->status == 400);
  }

  TEST_CASE("an inverted speed range is an invalid request naming the field") {
    TempDir dir("svc-query");
    seed_store(dir.path(), store_of(run_of("A", 0, 10)));
    ServiceHarness h(dir.path());
    auto c = h.client();
    auto res = c.Post("/queries", R"({"ego_speed_mps":[9,1]})", "application/json");
    REQUIRE(res);
    CHECK(res->status == 400);
    const json err = json::parse(res->body);
    CHECK(err["code"] == "invalid_request");
    CHECK(err["field_path"] == "ego_speed_mps");

    res = c.Post("/queries", "{not json", "application/json");
    REQUIRE(res);
    CHECK(res->status == 400);
  }

  TEST_CASE("unknown routes and resources are 404 with an error body") {
    TempDir dir("svc-404");
    seed_store(dir.path(), store_of(run_of("A", 0, 10)));
    ServiceHarness h(dir.path());
    auto c = h.client();
    for (const char* path : {"/nope", "/runs/run-missing/status", "/runs/run-missing/report",
                             "/collections/none"}) {
      auto res = c.Get(path);
      REQUIRE(res);
      CHECK_MESSAGE(res->status == 404, path);
      CHECK(json::parse(res->body)["code"] == "not_found");
    }
  }

  TEST_CASE("collection conflicts and invalid anchors") {
    TempDir dir("svc-coll");
    seed_store(dir.path(), store_of(run_of("A", 0, 20)));
    ServiceHarness h(dir.path());
    auto c = h.client();
    CHECK(c.Post("/collections", R"({"collection_id":"c1","name":"one"})", "application/json")->status == 201);
    CHECK(c.Post("/collections", R"({"collection_id":"c1","name":"again"})", "application/json")->status == 409);
    CHECK(c.Post("/collections", R"({"collection_id":"../x","name":"bad"})", "application/json")->status == 400);
    CHECK(c.Post("/collections/c1/anchors", R"({"acq":"A","t0":10})", "application/json")->status == 200);
    CHECK(c.Post("/collections/c1/anchors", R"({"acq":"A","t0":10})", "application/json")->status == 409);
    CHECK(c.Post("/collections/c1/anchors", R"({"acq":"A","t0":99})", "application/json")->status == 400);
    CHECK(c.Post("/collections/c1/anchors", R"({"acq":"A"})", "application/json")->status == 400);
    CHECK(c.Post("/collections/c2/anchors", R"({"acq":"A","t0":5})", "application/json")->status == 404);
    const json coll = body_of(c.Post("/collections/c1/windows", R"({"k":2,"m":1})", "application/json"));
    REQUIRE(coll["embedded"].size() == 1);
    CHECK(coll["embedded"][0]["states"].size() == 4);
    CHECK(c.Post("/collections/c1/windows", R"({"k":-1})", "application/json")->status == 400);
    CHECK(body_of(c.Get("/collections/c1"))["anchors"].size() == 1);
  }

  TEST_CASE("malformed runs are rejected before anything is queued") {
    TempDir dir("svc-badrun");
    seed_store(dir.path(), store_of(run_of("A", 0, 20)));
    ServiceHarness h(dir.path());
    auto c = h.client();
    c.Post("/collections", R"({"collection_id":"c1","name":"one"})", "application/json");
    json bad = {{"collection_id", "c1"},
                {"models", json::array({{{"model_id", "x"}, {"kind", "remote_chat"}}})}};
    auto res = c.Post("/runs", bad.dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == 400);
    CHECK(json::parse(res->body)["field_path"] == "models[0].endpoint");
    res = c.Post("/runs", json{{"collection_id", "zzz"}, {"models", personas_json()}}.dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == 404);
  }

  TEST_CASE("the full loop matches the workspace report and survives a restart") {
    TempDir dir("svc-loop");
    seed_store(dir.path(), build_protocol_fixture().store);
    std::string run_id;
    std::string report_body, uncertainty_body, heatmap_body;
    {
      ServiceHarness h(dir.path());
      auto c = h.client();
      run_id = drive_protocol(c);
      CHECK(h.wait_for_run(run_id) == "complete");
      const json status = body_of(c.Get("/runs/" + run_id + "/status"));
      CHECK(status["records"] == 48);

      auto res = c.Get("/runs/" + run_id + "/report");
      REQUIRE(res);
      CHECK(res->status == 200);
      report_body = res->body;
      uncertainty_body = c.Get("/runs/" + run_id + "/uncertainty")->body;
      heatmap_body = c.Get("/runs/" + run_id + "/heatmap")->body;
    }
    const auto bundle = Workspace(dir.path()).report(run_id);
    CHECK(report_body == bundle.report_json);
    CHECK(uncertainty_body == bundle.csv.at("uncertainty.csv"));
    CHECK(heatmap_body == bundle.csv.at("heatmap.csv"));
    CHECK(json::parse(report_body)["profiles"].size() == 3);

    ServiceHarness restarted(dir.path());
    auto c = restarted.client();
    CHECK(c.Get("/runs/" + run_id + "/report")->body == report_body);
    CHECK(body_of(c.Get("/collections/near-people"))["windows"].size() == 16);
  }

  TEST_CASE("reports of unfinished runs conflict") {
    TempDir dir("svc-queued");
    const auto f = build_protocol_fixture();
    Workspace ws(dir.path());
    ws.save_store(f.store);
    Collection coll;
    coll.collection_id = "c";
    coll.name = "c";
    for (const auto& w : f.windows) {
      coll.anchors.push_back(w.anchor);
      add_window(coll, w);
    }
    ws.save_collection(coll);
    const std::string run_id = ws.create_run("c", reference_personas(), fixed_standard_spec(false));
    ServiceHarness h(dir.path());
    auto c = h.client();
    auto res = c.Get("/runs/" + run_id + "/report");
    REQUIRE(res);
    CHECK(res->status == 409);
    CHECK(body_of(c.Get("/runs/" + run_id + "/status"))["state"] == "queued");
  }

  TEST_CASE("error mapping and bind addresses") {
    CHECK(http_status(to_api_error(Error(ErrorKind::coverage, "x")).code) == 400);
    CHECK(http_status(to_api_error(Error(ErrorKind::conflict, "x")).code) == 409);
    CHECK(http_status(to_api_error(Error(ErrorKind::not_found, "x")).code) == 404);
    CHECK(http_status(to_api_error(Error(ErrorKind::io, "x")).code) == 500);
    CHECK(parse_bind_address("127.0.0.1:8080") == std::pair<std::string, int>{"127.0.0.1", 8080});
    CHECK_THROWS_AS(parse_bind_address("localhost"), Error);
    CHECK_THROWS_AS(parse_bind_address(":80"), Error);
  }
}
