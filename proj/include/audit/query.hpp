#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "audit/scene.hpp"
#include "audit/scene_store.hpp"

namespace audit {

template <typename T>
struct Range {
  T min{};
  T max{};

  bool contains(T v) const noexcept { return min <= v && v <= max; }
  bool operator==(const Range&) const = default;
};

/// Holds iff some object of the class satisfies every given bound.
struct ObjectFilter {
  ObjectClass object_class = ObjectClass::person;
  std::optional<double> max_dist_m;
  std::optional<std::set<int>> lane_rel;

  bool operator==(const ObjectFilter&) const = default;
};

/// Conjunctive constraint set over scene states. Absent fields do not
/// constrain; the all-absent query matches every state.
struct ScenarioQuery {
  std::vector<ObjectFilter> object_filters;
  std::optional<Range<double>> ego_speed_mps;
  std::optional<std::set<Weather>> weather;
  std::optional<std::set<Illumination>> illumination;
  std::optional<std::set<RoadType>> road_type;
  std::optional<std::set<std::string>> acquisitions;
  std::optional<Range<std::int64_t>> time_range;

  bool operator==(const ScenarioQuery&) const = default;
};

/// Throws parameter naming the field for inverted ranges, negative
/// distances and lane codes outside the closed set.
void validate(const ScenarioQuery& query);

/// Parses the query file format (see to_canonical_json). Unknown keys are
/// rejected. The result is validated.
ScenarioQuery query_from_json(const json& value);

/// Canonical form: sorted keys, absent fields omitted, set-valued fields
/// sorted and deduplicated, object filters sorted by their own canonical
/// text, reals always encoded as floating point.
json to_canonical_json(const ScenarioQuery& query);

/// SHA-256 hex over to_canonical_json(query).dump().
std::string canonical_query_hash(const ScenarioQuery& query);

bool matches(const ScenarioQuery& query, const SceneState& state);

struct SceneKey {
  std::string acquisition_id;
  std::int64_t t = 0;

  auto operator<=>(const SceneKey&) const = default;
};

struct ScenarioContext {
  ScenarioQuery query;
  std::vector<SceneKey> hits;  // strictly ascending
  std::string created_at;
  std::string query_hash;
};

/// Linear scan of the store in (acquisition_id, t) order.
ScenarioContext execute_query(const SceneStore& store, const ScenarioQuery& query);

json to_json(const ScenarioContext& context);
ScenarioContext scenario_context_from_json(const json& value);

}  // namespace audit
