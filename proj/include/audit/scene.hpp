#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace audit {

using json = nlohmann::json;

enum class ObjectClass { person, cyclist, car, truck, bus, motorcycle, other };
enum class RoadType { residential, arterial, highway, intersection, other };
enum class Weather { clear, rain, fog, overcast, other };
enum class Illumination { day, dusk, night };

std::string_view to_string(ObjectClass value) noexcept;
std::string_view to_string(RoadType value) noexcept;
std::string_view to_string(Weather value) noexcept;
std::string_view to_string(Illumination value) noexcept;

std::optional<ObjectClass> parse_object_class(std::string_view name) noexcept;
std::optional<RoadType> parse_road_type(std::string_view name) noexcept;
std::optional<Weather> parse_weather(std::string_view name) noexcept;
std::optional<Illumination> parse_illumination(std::string_view name) noexcept;

/// Lane relation codes: 0 ego lane, -1/-2 left lanes, +1/+2 right lanes,
/// 9 off-road or sidewalk.
inline constexpr std::array<int, 6> kLaneRelCodes{-2, -1, 0, 1, 2, 9};
inline constexpr int kLaneRelOffRoad = 9;

constexpr bool is_valid_lane_rel(int code) noexcept {
  for (int c : kLaneRelCodes) {
    if (c == code) return true;
  }
  return false;
}

struct EgoDynamics {
  double speed_mps = 0.0;
  double steering_deg = 0.0;  // positive = left
  double brake = 0.0;         // [0,1]
  double accel_mps2 = 0.0;

  bool operator==(const EgoDynamics&) const = default;
};

/// Distances are measured from the ego front bumper center.
struct TrackedObject {
  std::uint32_t track_id = 0;
  ObjectClass object_class = ObjectClass::other;
  double dist_m = 0.0;
  int lane_rel = 0;
  double confidence = 0.0;

  bool operator==(const TrackedObject&) const = default;
};

struct RoadContext {
  RoadType type = RoadType::other;
  int lane_count = 1;
  bool sidewalk_present = false;

  bool operator==(const RoadContext&) const = default;
};

struct EnvironmentContext {
  Weather weather = Weather::clear;
  Illumination illumination = Illumination::day;

  bool operator==(const EnvironmentContext&) const = default;
};

/// One normalized 1 Hz snapshot of an acquisition.
struct SceneState {
  std::string acquisition_id;
  std::int64_t t = 0;
  EgoDynamics ego;
  std::vector<TrackedObject> objects;  // ascending track_id
  RoadContext road;
  EnvironmentContext environment;
  std::optional<std::string> image_ref;

  bool operator==(const SceneState&) const = default;
};

/// Ingest-format object (keys acq, t, ego, objects, road, env, image).
json to_json(const SceneState& state);

/// Strict inverse of to_json: unknown keys, wrong types and values outside
/// closed sets raise Error{parse} with the offending field path. Objects are
/// returned sorted by track_id; a repeated track_id is a parse error.
SceneState scene_state_from_json(const json& value);

/// Canonical single-line serialization (sorted keys, no trailing newline).
std::string canonical_line(const SceneState& state);

}  // namespace audit
