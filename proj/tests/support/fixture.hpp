#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "audit/assessment.hpp"
#include "audit/query.hpp"
#include "audit/scene_store.hpp"
#include "audit/synth.hpp"
#include "audit/window.hpp"

namespace audit::test {

SceneState make_state(const std::string& acq, std::int64_t t, double speed = 5.0,
                      std::vector<TrackedObject> objects = {});
TrackedObject person_at(std::uint32_t id, double dist, int lane = 9);
SceneStore store_of(const std::vector<SceneState>& states);
/// States t0..t1 inclusive for one acquisition.
std::vector<SceneState> run_of(const std::string& acq, std::int64_t t0, std::int64_t t1);

RiskAssessment make_assessment(const std::string& window, const std::string& model, int level,
                               std::vector<int> types, std::vector<int> evidence,
                               int uncertainty = 1);

SynthSpec seed42_spec();
ScenarioQuery near_people_query();

/// seed 42 store -> near-people query -> 16 anchors -> k=m=3 windows.
struct ProtocolFixture {
  SceneStore store;
  ScenarioContext context;
  std::vector<Anchor> anchors;
  std::vector<ScenarioWindow> windows;
};
ProtocolFixture build_protocol_fixture();

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace audit::test
