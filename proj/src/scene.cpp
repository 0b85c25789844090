#include "audit/scene.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "audit/error.hpp"

namespace audit {

namespace {

constexpr std::array<std::string_view, 7> kObjectClassNames{
    "person", "cyclist", "car", "truck", "bus", "motorcycle", "other"};
constexpr std::array<std::string_view, 5> kRoadTypeNames{
    "residential", "arterial", "highway", "intersection", "other"};
constexpr std::array<std::string_view, 5> kWeatherNames{"clear", "rain", "fog", "overcast",
                                                        "other"};
constexpr std::array<std::string_view, 3> kIlluminationNames{"day", "dusk", "night"};

template <typename Enum, std::size_t N>
std::optional<Enum> lookup(const std::array<std::string_view, N>& names, std::string_view name) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == name) return static_cast<Enum>(i);
  }
  return std::nullopt;
}

template <std::size_t N>
std::string closed_set(const std::array<std::string_view, N>& names) {
  std::string out = "{";
  for (std::size_t i = 0; i < N; ++i) {
    if (i != 0) out += ", ";
    out += names[i];
  }
  return out + "}";
}

std::string child(const std::string& parent, std::string_view key) {
  return parent.empty() ? std::string(key) : parent + "." + std::string(key);
}

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw Error(ErrorKind::parse, message, path);
}

void require_object(const json& v, const std::string& path) {
  if (!v.is_object()) fail(path.empty() ? "$" : path, "expected an object");
}

void reject_unknown_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                         const std::string& path) {
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      fail(child(path, key), "unknown key '" + key + "'");
    }
  }
}

const json& field(const json& obj, std::string_view key, const std::string& path) {
  auto it = obj.find(std::string(key));
  if (it == obj.end()) fail(child(path, key), "missing required field");
  return *it;
}

double real_field(const json& obj, std::string_view key, const std::string& path) {
  const json& v = field(obj, key, path);
  if (!v.is_number()) fail(child(path, key), "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) fail(child(path, key), "expected a finite number");
  return d;
}

std::int64_t integer_field(const json& obj, std::string_view key, const std::string& path) {
  const json& v = field(obj, key, path);
  if (!v.is_number_integer()) fail(child(path, key), "expected an integer");
  return v.get<std::int64_t>();
}

template <typename Enum, std::size_t N>
Enum enum_field(const json& obj, std::string_view key, const std::string& path,
                const std::array<std::string_view, N>& names) {
  const json& v = field(obj, key, path);
  if (!v.is_string()) fail(child(path, key), "expected a string");
  auto parsed = lookup<Enum>(names, v.get<std::string>());
  if (!parsed) {
    fail(child(path, key), "value '" + v.get<std::string>() + "' not in " + closed_set(names));
  }
  return *parsed;
}

void check_unit_interval(double v, const std::string& path) {
  if (v < 0.0 || v > 1.0) fail(path, "value must lie in [0,1]");
}

}  // namespace

std::string_view to_string(ObjectClass value) noexcept {
  return kObjectClassNames[static_cast<std::size_t>(value)];
}
std::string_view to_string(RoadType value) noexcept {
  return kRoadTypeNames[static_cast<std::size_t>(value)];
}
std::string_view to_string(Weather value) noexcept {
  return kWeatherNames[static_cast<std::size_t>(value)];
}
std::string_view to_string(Illumination value) noexcept {
  return kIlluminationNames[static_cast<std::size_t>(value)];
}

std::optional<ObjectClass> parse_object_class(std::string_view name) noexcept {
  return lookup<ObjectClass>(kObjectClassNames, name);
}
std::optional<RoadType> parse_road_type(std::string_view name) noexcept {
  return lookup<RoadType>(kRoadTypeNames, name);
}
std::optional<Weather> parse_weather(std::string_view name) noexcept {
  return lookup<Weather>(kWeatherNames, name);
}
std::optional<Illumination> parse_illumination(std::string_view name) noexcept {
  return lookup<Illumination>(kIlluminationNames, name);
}

json to_json(const SceneState& state) {
  json objects = json::array();
  for (const auto& o : state.objects) {
    objects.push_back({{"track_id", o.track_id},
                       {"class", to_string(o.object_class)},
                       {"dist_m", o.dist_m},
                       {"lane_rel", o.lane_rel},
                       {"conf", o.confidence}});
  }
  json out = {
      {"acq", state.acquisition_id},
      {"t", state.t},
      {"ego",
       {{"speed_mps", state.ego.speed_mps},
        {"steering_deg", state.ego.steering_deg},
        {"brake", state.ego.brake},
        {"accel_mps2", state.ego.accel_mps2}}},
      {"objects", std::move(objects)},
      {"road",
       {{"type", to_string(state.road.type)},
        {"lanes", state.road.lane_count},
        {"sidewalk", state.road.sidewalk_present}}},
      {"env",
       {{"weather", to_string(state.environment.weather)},
        {"illumination", to_string(state.environment.illumination)}}},
  };
  if (state.image_ref) out["image"] = *state.image_ref;
  return out;
}

SceneState scene_state_from_json(const json& value) {
  require_object(value, "");
  reject_unknown_keys(value, {"acq", "t", "ego", "objects", "road", "env", "image"}, "");

  SceneState s;
  const json& acq = field(value, "acq", "");
  if (!acq.is_string() || acq.get<std::string>().empty()) fail("acq", "expected a non-empty string");
  s.acquisition_id = acq.get<std::string>();
  s.t = integer_field(value, "t", "");
  if (s.t < 0) fail("t", "t must be non-negative");

  const json& ego = field(value, "ego", "");
  require_object(ego, "ego");
  reject_unknown_keys(ego, {"speed_mps", "steering_deg", "brake", "accel_mps2"}, "ego");
  s.ego.speed_mps = real_field(ego, "speed_mps", "ego");
  if (s.ego.speed_mps < 0.0) fail("ego.speed_mps", "speed must be non-negative");
  s.ego.steering_deg = real_field(ego, "steering_deg", "ego");
  s.ego.brake = real_field(ego, "brake", "ego");
  check_unit_interval(s.ego.brake, "ego.brake");
  s.ego.accel_mps2 = real_field(ego, "accel_mps2", "ego");

  const json& objects = field(value, "objects", "");
  if (!objects.is_array()) fail("objects", "expected an array");
  std::set<std::uint32_t> seen;
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const std::string path = "objects[" + std::to_string(i) + "]";
    const json& o = objects[i];
    require_object(o, path);
    reject_unknown_keys(o, {"track_id", "class", "dist_m", "lane_rel", "conf"}, path);
    TrackedObject obj;
    const std::int64_t id = integer_field(o, "track_id", path);
    if (id < 0 || id > static_cast<std::int64_t>(UINT32_MAX)) {
      fail(child(path, "track_id"), "track_id must be a non-negative 32-bit integer");
    }
    obj.track_id = static_cast<std::uint32_t>(id);
    if (!seen.insert(obj.track_id).second) {
      fail(child(path, "track_id"), "repeated track_id " + std::to_string(id));
    }
    obj.object_class = enum_field<ObjectClass>(o, "class", path, kObjectClassNames);
    obj.dist_m = real_field(o, "dist_m", path);
    if (obj.dist_m < 0.0) fail(child(path, "dist_m"), "dist_m must be non-negative");
    const std::int64_t lane = integer_field(o, "lane_rel", path);
    if (!is_valid_lane_rel(static_cast<int>(lane)) || lane != static_cast<int>(lane)) {
      fail(child(path, "lane_rel"),
           "lane_rel " + std::to_string(lane) + " not in {-2, -1, 0, 1, 2, 9}");
    }
    obj.lane_rel = static_cast<int>(lane);
    obj.confidence = real_field(o, "conf", path);
    check_unit_interval(obj.confidence, child(path, "conf"));
    s.objects.push_back(obj);
  }
  std::sort(s.objects.begin(), s.objects.end(),
            [](const TrackedObject& a, const TrackedObject& b) { return a.track_id < b.track_id; });

  const json& road = field(value, "road", "");
  require_object(road, "road");
  reject_unknown_keys(road, {"type", "lanes", "sidewalk"}, "road");
  s.road.type = enum_field<RoadType>(road, "type", "road", kRoadTypeNames);
  const std::int64_t lanes = integer_field(road, "lanes", "road");
  if (lanes < 1 || lanes > 64) fail("road.lanes", "lanes must be a positive integer");
  s.road.lane_count = static_cast<int>(lanes);
  const json& sidewalk = field(road, "sidewalk", "road");
  if (!sidewalk.is_boolean()) fail("road.sidewalk", "expected a boolean");
  s.road.sidewalk_present = sidewalk.get<bool>();

  const json& env = field(value, "env", "");
  require_object(env, "env");
  reject_unknown_keys(env, {"weather", "illumination"}, "env");
  s.environment.weather = enum_field<Weather>(env, "weather", "env", kWeatherNames);
  s.environment.illumination =
      enum_field<Illumination>(env, "illumination", "env", kIlluminationNames);

  if (auto it = value.find("image"); it != value.end()) {
    if (!it->is_string() || it->get<std::string>().empty()) {
      fail("image", "expected a non-empty string path");
    }
    s.image_ref = it->get<std::string>();
  }
  return s;
}

std::string canonical_line(const SceneState& state) { return to_json(state).dump(); }

}  // namespace audit
