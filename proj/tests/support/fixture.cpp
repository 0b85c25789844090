#include "support/fixture.hpp"

#include <random>

#include "audit/workspace.hpp"

namespace audit::test {

SceneState make_state(const std::string& acq, std::int64_t t, double speed,
                      std::vector<TrackedObject> objects) {
  SceneState s;
  s.acquisition_id = acq;
  s.t = t;
  s.ego = {speed, 0.0, 0.0, 0.0};
  s.objects = std::move(objects);
  s.road = {RoadType::residential, 2, true};
  s.environment = {Weather::clear, Illumination::day};
  return s;
}

TrackedObject person_at(std::uint32_t id, double dist, int lane) {
  return {id, ObjectClass::person, dist, lane, 0.9};
}

SceneStore store_of(const std::vector<SceneState>& states) {
  SceneStoreBuilder b;
  for (const auto& s : states) b.add(s);
  return std::move(b).build();
}

std::vector<SceneState> run_of(const std::string& acq, std::int64_t t0, std::int64_t t1) {
  std::vector<SceneState> out;
  for (auto t = t0; t <= t1; ++t) out.push_back(make_state(acq, t, 5.0 + 0.1 * static_cast<double>(t - t0)));
  return out;
}

RiskAssessment make_assessment(const std::string& window, const std::string& model, int level,
                               std::vector<int> types, std::vector<int> evidence,
                               int uncertainty) {
  RiskAssessment a;
  a.window_id = window;
  a.model_id = model;
  a.overall_risk_level = level;
  a.window_has_risk = level >= 1 ? 1 : 0;
  a.risk_types = std::move(types);
  a.evidence_signals = std::move(evidence);
  a.uncertainty = uncertainty;
  return a;
}

SynthSpec seed42_spec() {
  return synth_spec_from_json(read_json_file(std::filesystem::path(AUDIT_FIXTURE_DIR) / "seed42_spec.json"));
}

ScenarioQuery near_people_query() {
  return query_from_json(
      read_json_file(std::filesystem::path(AUDIT_FIXTURE_DIR) / "near_people_query.json"));
}

ProtocolFixture build_protocol_fixture() {
  ProtocolFixture f;
  f.store = store_of(synthesize_states(42, seed42_spec()));
  f.context = execute_query(f.store, near_people_query());
  f.anchors = promote_hits(f.context, f.store, 16, 3, 3);
  for (const auto& a : f.anchors) f.windows.push_back(build_window(f.store, a, 3, 3));
  return f;
}

TempDir::TempDir(const std::string& tag) {
  std::random_device rd;
  path_ = std::filesystem::temp_directory_path() /
          ("audit-" + tag + "-" + std::to_string(rd()) + std::to_string(rd()));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

}  // namespace audit::test
