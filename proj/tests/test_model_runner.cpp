#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "audit/error.hpp"
#include "audit/persona.hpp"
#include "audit/remote_client.hpp"
#include "audit/runner.hpp"
#include "doctest.h"
#include "support/fixture.hpp"
#include "support/stub_server.hpp"

using namespace audit;
using namespace audit::test;

namespace {

const ModelSpec& persona(const std::string& id) {
  static const auto personas = reference_personas();
  for (const auto& p : personas) {
    if (p.model_id == id) return p;
  }
  throw std::logic_error("no persona " + id);
}

ScenarioWindow window_with(std::vector<TrackedObject> objects, double speed = 5.0) {
  std::vector<SceneState> states;
  for (std::int64_t t = 0; t <= 10; ++t) states.push_back(make_state("A", t, speed, objects));
  return build_window(store_of(states), {"A", 5, std::nullopt}, 3, 3);
}

RiskAssessment respond(const ModelSpec& spec, const ScenarioWindow& w) {
  const auto prompt = render_prompt(w, fixed_standard_spec());
  return std::get<RiskAssessment>(parse_assessment(mock_persona_respond(prompt, w, *spec.persona)));
}

ModelSpec remote(const std::string& id, const std::string& endpoint) {
  ModelSpec s;
  s.model_id = id;
  s.kind = ModelKind::remote_chat;
  s.endpoint = endpoint;
  s.timeout_s = 2.0;
  s.retry.initial_backoff_ms = 10;
  s.retry.max_backoff_ms = 20;
  return s;
}

RenderedPrompt small_prompt() {
  RenderedPrompt p;
  p.text = "assess";
  p.window_id = "w";
  return p;
}

constexpr const char* kPayload =
    R"({"window_has_risk":1,"overall_risk_level":3,"risk_types":[2],"evidence_signals":[1],"uncertainty":0})";

std::vector<std::string> record_keys(const std::vector<RunRecord>& records) {
  std::vector<std::string> out;
  for (const auto& r : records) {
    out.push_back(r.model_id + "|" + r.window_id + "|" + r.prompt_hash + "|" +
                  std::string(to_string(r.status)) + "|" + r.raw_response);
  }
  std::sort(out.begin(), out.end());
  return out;
}

class CountingBackend final : public ModelBackend {
 public:
  CountingBackend(std::atomic<int>& in_flight, std::atomic<int>& peak)
      : in_flight_(in_flight), peak_(peak) {}
  BackendReply respond(const RenderedPrompt&, const ScenarioWindow&) override {
    const int now = ++in_flight_;
    int seen = peak_.load();
    while (now > seen && !peak_.compare_exchange_weak(seen, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(15));
    --in_flight_;
    BackendReply r;
    r.raw_response = kPayload;
    return r;
  }

 private:
  std::atomic<int>& in_flight_;
  std::atomic<int>& peak_;
};

class ThrowingBackend final : public ModelBackend {
 public:
  BackendReply respond(const RenderedPrompt&, const ScenarioWindow&) override {
    throw std::runtime_error("backend exploded");
  }
};

}  // namespace

TEST_SUITE("model_runner") {
  TEST_CASE("conservative persona escalates for a near person at low speed") {
    const auto a = respond(persona("persona-conservative"), window_with({person_at(1, 4.0)}));
    CHECK(a.overall_risk_level == 5);
    CHECK(a.window_has_risk == 1);
    REQUIRE(!a.risk_types.empty());
    CHECK(a.risk_types.front() == 2);
  }

  TEST_CASE("tolerant persona stays at its base without persons") {
    const auto a = respond(persona("persona-tolerant"), window_with({}));
    CHECK(a.overall_risk_level == 1);
    CHECK(a.window_has_risk == 1);
  }

  TEST_CASE("persona output is deterministic and always conformant") {
    const auto f = build_protocol_fixture();
    for (const auto& spec : reference_personas()) {
      for (const auto& w : f.windows) {
        const auto prompt = render_prompt(w, fixed_standard_spec());
        const auto a = mock_persona_respond(prompt, w, *spec.persona);
        CHECK(a == mock_persona_respond(prompt, w, *spec.persona));
        CHECK(std::holds_alternative<RiskAssessment>(parse_assessment(a)));
      }
    }
  }

  TEST_CASE("speed boost and clamping") {
    PersonaRules r{5, LevelBoost{10.0, 3}, LevelBoost{8.0, 2}, {7, 2}, {1}, 0};
    const auto w = window_with({person_at(1, 2.0)}, 20.0);
    const auto prompt = render_prompt(w, fixed_standard_spec());
    const auto a = std::get<RiskAssessment>(parse_assessment(mock_persona_respond(prompt, w, r)));
    CHECK(a.overall_risk_level == 6);
    CHECK(a.risk_types == std::vector<int>{7, 2});
  }

  TEST_CASE("sixteen windows by three personas give 48 ok records") {
    const auto f = build_protocol_fixture();
    const auto models = reference_personas();
    const std::vector<PromptSpec> prompts{fixed_standard_spec()};
    MemorySink sink;
    const auto summary = execute_run(f.windows, models, prompts, sink);
    CHECK(summary.records == 48);
    const auto records = sink.records();
    REQUIRE(records.size() == 48);
    for (const auto& r : records) {
      CHECK(r.status == RunStatus::ok);
      CHECK(r.run_id == summary.run_id);
      CHECK(r.token_usage.has_value());
      CHECK(std::holds_alternative<RiskAssessment>(parse_assessment(r)));
    }
    for (const auto& m : models) CHECK(summary.status_by_model.at(m.model_id).at(RunStatus::ok) == 16);
  }

  TEST_CASE("an empty window list gives an empty run with a valid id") {
    MemorySink sink;
    const std::vector<PromptSpec> prompts{fixed_standard_spec()};
    const auto summary = execute_run({}, reference_personas(), prompts, sink);
    CHECK(summary.records == 0);
    CHECK(summary.run_id.rfind("run-", 0) == 0);
    CHECK(summary.run_id.size() == std::string("run-20260101T000000Z-00000000").size());
    CHECK(sink.records().empty());
  }

  TEST_CASE("an unreachable model yields transport_error and the run completes") {
    const auto w = window_with({person_at(1, 4.0)});
    auto spec = remote("unreachable", "http://127.0.0.1:1/v1/chat/completions");
    spec.retry.max_attempts = 2;
    MemorySink sink;
    const std::vector<ScenarioWindow> windows{w};
    const std::vector<ModelSpec> models{spec};
    const std::vector<PromptSpec> prompts{fixed_standard_spec()};
    execute_run(windows, models, prompts, sink);
    const auto records = sink.records();
    REQUIRE(records.size() == 1);
    CHECK(records[0].status == RunStatus::transport_error);
    CHECK(records[0].attempts == 2);
    CHECK(!records[0].error.empty());
  }

  TEST_CASE("a stub echoing a valid payload is recorded verbatim with usage") {
    StubServer stub([](const std::string&) { return StubReply{200, chat_envelope(kPayload, 11, 7)}; });
    const auto reply = remote_chat_call(small_prompt(), remote("stub", stub.endpoint()));
    CHECK(reply.status == RunStatus::ok);
    CHECK(reply.raw_response == kPayload);
    REQUIRE(reply.token_usage.has_value());
    CHECK(reply.token_usage->prompt_tokens == 11);
    CHECK(reply.token_usage->completion_tokens == 7);
    CHECK(reply.attempts == 1);
    const json request = json::parse(stub.last_body());
    CHECK(request["model"] == "stub");
    CHECK(request["temperature"] == 0);
    CHECK(request["messages"][0]["content"] == "assess");
  }

  TEST_CASE("three server errors exhaust the retries") {
    StubServer stub([](const std::string&) { return StubReply{500, "{}"}; });
    const auto reply = remote_chat_call(small_prompt(), remote("stub", stub.endpoint()));
    CHECK(reply.status == RunStatus::transport_error);
    CHECK(reply.attempts == 3);
    CHECK(stub.hits() == 3);
  }

  TEST_CASE("client errors are not retried and recovery after one failure succeeds") {
    StubServer bad([](const std::string&) { return StubReply{400, "{}"}; });
    const auto r1 = remote_chat_call(small_prompt(), remote("stub", bad.endpoint()));
    CHECK(r1.status == RunStatus::transport_error);
    CHECK(bad.hits() == 1);

    std::atomic<int> calls{0};
    StubServer flaky([&](const std::string&) {
      return ++calls == 1 ? StubReply{503, "{}"} : StubReply{200, chat_envelope(kPayload)};
    });
    const auto r2 = remote_chat_call(small_prompt(), remote("stub", flaky.endpoint()));
    CHECK(r2.status == RunStatus::ok);
    CHECK(r2.attempts == 2);
  }

  TEST_CASE("a slow server gives timeout") {
    StubServer stub([](const std::string&) { return StubReply{200, chat_envelope(kPayload), 1200}; });
    auto spec = remote("slow", stub.endpoint());
    spec.timeout_s = 0.3;
    const auto reply = remote_chat_call(small_prompt(), spec);
    CHECK(reply.status == RunStatus::timeout);
  }

  TEST_CASE("refusals are their own status") {
    StubServer stub([](const std::string&) {
      const json env = {{"choices", json::array({{{"message", {{"role", "assistant"}, {"content", nullptr}, {"refusal", "no"}}},
                                                  {"finish_reason", "stop"}}})}};
      return StubReply{200, env.dump()};
    });
    CHECK(remote_chat_call(small_prompt(), remote("r", stub.endpoint())).status == RunStatus::refused);
  }

  TEST_CASE("a missing credential stops the run before dispatch") {
    StubServer stub([](const std::string&) { return StubReply{200, chat_envelope(kPayload)}; });
    auto spec = remote("keyed", stub.endpoint());
    spec.api_key_env = "AUDIT_TEST_UNSET_KEY";
    ::unsetenv("AUDIT_TEST_UNSET_KEY");
    MemorySink sink;
    const std::vector<ScenarioWindow> windows{window_with({})};
    const std::vector<ModelSpec> models{persona("persona-moderate"), spec};
    const std::vector<PromptSpec> prompts{fixed_standard_spec()};
    try {
      execute_run(windows, models, prompts, sink);
      FAIL("expected configuration error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::configuration);
      CHECK(e.field_path() == "api_key_env");
    }
    CHECK(sink.records().empty());
    CHECK(stub.hits() == 0);

    ::setenv("AUDIT_TEST_UNSET_KEY", "secret-token", 1);
    const auto reply = remote_chat_call(small_prompt(), spec);
    CHECK(reply.status == RunStatus::ok);
    ::unsetenv("AUDIT_TEST_UNSET_KEY");
  }

  TEST_CASE("malformed model specs are rejected with a field path") {
    auto field_of = [](const json& doc) {
      try {
        model_specs_from_json(doc);
      } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::configuration);
        return e.field_path();
      }
      return std::string("accepted");
    };
    CHECK(field_of(json::array({{{"model_id", "a"}, {"kind", "remote_chat"}}})) == "models[0].endpoint");
    CHECK(field_of(json::array({{{"model_id", "a"}, {"kind", "telepathy"}}})) == "models[0].kind");
    CHECK(field_of(json::array({{{"model_id", "a"}, {"kind", "mock_persona"}}})) == "models[0].persona");
    CHECK(field_of(json::array({{{"model_id", "a"}, {"kind", "remote_chat"}, {"endpoint", "ftp://x"}}})) ==
          "models[0].endpoint");
    CHECK(field_of(json::array({{{"model_id", "a"}, {"kind", "remote_chat"}, {"endpoint", "http://x"}, {"colour", 1}}})) ==
          "models[0].colour");
    json personas = json::array();
    for (const auto& p : reference_personas()) personas.push_back(to_json(p));
    CHECK(field_of(personas) == "accepted");
    personas[2]["model_id"] = personas[0]["model_id"];
    CHECK(field_of(personas) == "models[2].model_id");
    json bad_code = json::array({to_json(persona("persona-moderate"))});
    bad_code[0]["persona"]["dominant_factor_policy"] = {2, 11};
    CHECK(field_of(bad_code) == "models[0].persona.dominant_factor_policy");
    CHECK(field_of(json{{"models", json::array({to_json(persona("persona-tolerant"))})}}) == "accepted");
  }

  TEST_CASE("backoff grows geometrically up to the cap") {
    RetryPolicy p;
    CHECK(p.backoff_before(1) == 0);
    CHECK(p.backoff_before(2) == 250);
    CHECK(p.backoff_before(3) == 500);
    CHECK(p.backoff_before(10) == 4000);
  }

  TEST_CASE("the record set does not depend on dispatch order") {
    const auto f = build_protocol_fixture();
    const auto models = reference_personas();
    const std::vector<PromptSpec> prompts{fixed_standard_spec()};
    MemorySink plain;
    RunOptions base;
    base.run_id = "run-fixed";
    execute_run(f.windows, models, prompts, plain, base);
    for (std::uint64_t seed : {1u, 2u, 99u}) {
      MemorySink shuffled;
      RunOptions opt = base;
      opt.shuffle_seed = seed;
      opt.parallel = static_cast<int>(seed % 3) + 1;
      execute_run(f.windows, models, prompts, shuffled, opt);
      CHECK(record_keys(shuffled.records()) == record_keys(plain.records()));
    }
  }

  TEST_CASE("concurrency per model never exceeds its bound") {
    const auto f = build_protocol_fixture();
    const std::vector<PromptSpec> prompts{fixed_standard_spec()};
    for (int bound : {1, 2, 3}) {
      std::atomic<int> in_flight{0}, peak{0};
      auto spec = persona("persona-moderate");
      spec.max_parallel = bound;
      const std::vector<ModelSpec> models{spec};
      RunOptions opt;
      opt.backend_factory = [&](const ModelSpec&) {
        return std::make_unique<CountingBackend>(in_flight, peak);
      };
      MemorySink sink;
      execute_run(f.windows, models, prompts, sink, opt);
      CHECK(sink.records().size() == 16);
      CHECK(peak.load() <= bound);
      CHECK(peak.load() >= 1);
    }
  }

  TEST_CASE("a failing backend does not affect other models") {
    const auto f = build_protocol_fixture();
    const std::vector<PromptSpec> prompts{fixed_standard_spec()};
    auto broken = persona("persona-tolerant");
    broken.model_id = "broken";
    const std::vector<ModelSpec> models{persona("persona-conservative"), broken};
    RunOptions opt;
    opt.backend_factory = [&](const ModelSpec& spec) -> std::unique_ptr<ModelBackend> {
      if (spec.model_id == "broken") return std::make_unique<ThrowingBackend>();
      return make_backend(spec);
    };
    MemorySink sink;
    const auto summary = execute_run(f.windows, models, prompts, sink, opt);
    CHECK(summary.status_by_model.at("broken").at(RunStatus::transport_error) == 16);
    CHECK(summary.status_by_model.at("persona-conservative").at(RunStatus::ok) == 16);
    for (const auto& r : sink.records()) {
      if (r.model_id == "broken") CHECK(r.error.find("backend exploded") != std::string::npos);
    }
  }

  TEST_CASE("records round trip through JSON lines") {
    TempDir dir("sink");
    const auto path = dir.path() / "records.jsonl";
    const auto f = build_protocol_fixture();
    const std::vector<ScenarioWindow> windows(f.windows.begin(), f.windows.begin() + 2);
    const std::vector<PromptSpec> prompts{fixed_standard_spec()};
    MemorySink memory;
    {
      JsonlSink sink(path);
      RunOptions opt;
      opt.run_id = "run-x";
      execute_run(windows, reference_personas(), prompts, sink, opt);
      execute_run(windows, reference_personas(), prompts, memory, opt);
    }
    std::ifstream in(path);
    std::vector<RunRecord> loaded;
    for (std::string line; std::getline(in, line);) loaded.push_back(run_record_from_json(json::parse(line)));
    CHECK(loaded.size() == 6);
    CHECK(record_keys(loaded) == record_keys(memory.records()));
  }

  TEST_CASE("multimodal requests embed the frames in order") {
    TempDir dir("frames");
    std::ofstream(dir.path() / "a.jpg", std::ios::binary) << "abc";
    std::ofstream(dir.path() / "b.png", std::ios::binary) << "hello";
    RenderedPrompt p = small_prompt();
    p.attachments = {"a.jpg", "b.png"};
    auto spec = remote("vision", "http://127.0.0.1:1/v1/chat/completions");
    spec.kind = ModelKind::remote_multimodal;
    spec.remote_model = "vision-large";
    const json req = build_chat_request(p, spec, dir.path());
    CHECK(req["model"] == "vision-large");
    const json& content = req["messages"][0]["content"];
    REQUIRE(content.size() == 3);
    CHECK(content[0]["text"] == "assess");
    CHECK(content[1]["image_url"]["url"] == "data:image/jpeg;base64,YWJj");
    CHECK(content[2]["image_url"]["url"] == "data:image/png;base64,aGVsbG8=");

    spec.kind = ModelKind::remote_chat;
    CHECK(build_chat_request(p, spec, dir.path())["messages"][0]["content"] == "assess");

    p.attachments = {"missing.jpg"};
    spec.kind = ModelKind::remote_multimodal;
    const auto reply = remote_chat_call(p, spec, dir.path());
    CHECK(reply.status == RunStatus::transport_error);
    CHECK(reply.attempts == 0);
  }
}
