#include "audit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iterator>
#include <numbers>
#include <random>

#include "audit/error.hpp"
#include "audit/tracking.hpp"

namespace audit {

namespace {

// Distribution objects from <random> are not portable across standard
// libraries, so all draws go through these explicit conversions.
class Draw {
 public:
  explicit Draw(std::uint64_t seed) : engine_(seed) {}

  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }
  std::int64_t integer(std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo + 1);
    return lo + static_cast<std::int64_t>(engine_() % span);
  }
  bool chance(double p) { return unit() < p; }

  template <typename Enum>
  Enum categorical(const std::map<Enum, double>& weights) {
    double total = 0.0;
    for (const auto& [_, w] : weights) total += w;
    double pick = unit() * total;
    for (const auto& [value, w] : weights) {
      if (pick < w) return value;
      pick -= w;
    }
    return std::prev(weights.end())->first;
  }

 private:
  std::mt19937_64 engine_;
};

double round_to(double v, double step) {
  const double r = std::round(v / step) * step;
  return r == 0.0 ? 0.0 : r;
}

struct SimObject {
  ObjectClass cls;
  double x;
  double y;
  double vx;  // relative to ego, m/s
  double vy;
  double confidence;
  bool sidewalk;
  std::uint32_t id = 0;
};

struct Encounter {
  std::int64_t center;  // seconds from acquisition start
  double x;
  double y;
  double vx;
  double vy;
  double confidence;
  std::uint32_t id;
};

struct Layout {
  int lanes;
  int ego_lane;  // 0 = leftmost
  double left_edge;   // y of left road edge
  double right_edge;  // y of right road edge
  bool sidewalk;
};

Layout make_layout(Draw& rng, RoadType type) {
  int lanes = 1;
  switch (type) {
    case RoadType::residential: lanes = static_cast<int>(rng.integer(1, 2)); break;
    case RoadType::arterial: lanes = static_cast<int>(rng.integer(2, 3)); break;
    case RoadType::highway: lanes = static_cast<int>(rng.integer(3, 4)); break;
    case RoadType::intersection: lanes = static_cast<int>(rng.integer(2, 3)); break;
    case RoadType::other: lanes = static_cast<int>(rng.integer(1, 2)); break;
  }
  Layout l{};
  l.lanes = lanes;
  l.ego_lane = lanes - 1;  // keep right
  l.left_edge = (static_cast<double>(l.ego_lane) + 0.5) * kDefaultLaneWidthM;
  l.right_edge = -0.5 * kDefaultLaneWidthM;
  l.sidewalk = type != RoadType::highway && rng.chance(0.85);
  return l;
}

int lane_code(const Layout& layout, double y, bool sidewalk) {
  if (sidewalk || y > layout.left_edge || y < layout.right_edge) return kLaneRelOffRoad;
  return lane_rel_from_lateral(y);
}

SimObject spawn_background(Draw& rng, const Layout& layout, double ahead_min, double ahead_max) {
  const double r = rng.unit();
  SimObject o{};
  o.confidence = rng.uniform(0.55, 0.99);
  o.x = rng.uniform(ahead_min, ahead_max);
  if (r < 0.6 || !layout.sidewalk) {
    o.cls = r < 0.45 ? ObjectClass::car
            : r < 0.52 ? ObjectClass::truck
            : r < 0.56 ? ObjectClass::bus
                       : (r < 0.6 ? ObjectClass::motorcycle : ObjectClass::car);
    const int lane = static_cast<int>(rng.integer(0, layout.lanes - 1));
    o.y = static_cast<double>(layout.ego_lane - lane) * kDefaultLaneWidthM;
    o.vx = rng.uniform(-3.0, 3.0);
    o.vy = 0.0;
  } else if (r < 0.85) {
    o.cls = ObjectClass::person;
    o.sidewalk = true;
    const bool right = rng.chance(0.6);
    o.y = right ? layout.right_edge - rng.uniform(1.0, 3.0)
                : layout.left_edge + rng.uniform(1.0, 3.0);
    o.vx = rng.uniform(-1.4, 1.4);  // walking speed, ego motion added per step
    o.vy = 0.0;
  } else {
    o.cls = ObjectClass::cyclist;
    o.y = layout.right_edge + 0.6;
    o.vx = rng.uniform(3.0, 6.0);  // world speed, ego motion added per step
    o.vy = 0.0;
  }
  return o;
}

double target_speed(Draw& rng, RoadType type) {
  return type == RoadType::highway ? rng.uniform(20.0, 28.0) : rng.uniform(5.0, 12.0);
}

void validate(const SynthSpec& spec) {
  if (spec.acquisitions < 1) {
    throw Error(ErrorKind::parameter, "acquisitions must be at least 1", "acquisitions");
  }
  if (spec.duration_s < kMinSynthDurationS) {
    throw Error(ErrorKind::parameter,
                "duration_s " + std::to_string(spec.duration_s) +
                    " cannot host a window of 3 s before and after an anchor (minimum 7)",
                "duration_s");
  }
  if (spec.start_t < 0) throw Error(ErrorKind::parameter, "start_t must be non-negative", "start_t");
  if (!(spec.near_person_m >= 2.0)) {
    throw Error(ErrorKind::parameter, "near_person_m must be at least 2 m", "near_person_m");
  }
  if (!(spec.encounters_per_minute >= 0.0)) {
    throw Error(ErrorKind::parameter, "encounters_per_minute must be non-negative",
                "encounters_per_minute");
  }
  if (!(spec.background_objects >= 0.0 && spec.background_objects <= 40.0)) {
    throw Error(ErrorKind::parameter, "background_objects must lie in [0,40]",
                "background_objects");
  }
  auto check_weights = [](const auto& weights, const char* name) {
    double total = 0.0;
    for (const auto& [_, w] : weights) {
      if (!(w >= 0.0) || !std::isfinite(w)) {
        throw Error(ErrorKind::parameter, "weights must be non-negative", name);
      }
      total += w;
    }
    if (!(total > 0.0)) throw Error(ErrorKind::parameter, "weights must not all be zero", name);
  };
  check_weights(spec.weather, "weather");
  check_weights(spec.illumination, "illumination");
  check_weights(spec.road_type, "road_type");
}

std::vector<SceneState> synthesize_acquisition(Draw& rng, const SynthSpec& spec,
                                               const std::string& acquisition_id) {
  const RoadType road = rng.categorical(spec.road_type);
  const Layout layout = make_layout(rng, road);
  const Weather weather = rng.categorical(spec.weather);
  const Illumination illumination = rng.categorical(spec.illumination);

  const auto n_encounters = std::max<std::int64_t>(
      1, std::llround(spec.duration_s / 60.0 * spec.encounters_per_minute));
  // Identities come straight from the simulation, in creation order.
  std::uint32_t next_id = 0;
  std::vector<Encounter> encounters;
  for (std::int64_t i = 0; i < n_encounters; ++i) {
    Encounter e{};
    e.center = rng.integer(3, spec.duration_s - 4);
    const double r = rng.uniform(1.5, 0.8 * spec.near_person_m);
    const double bearing = rng.uniform(-std::numbers::pi / 3.0, std::numbers::pi / 3.0);
    e.x = r * std::cos(bearing);
    e.y = r * std::sin(bearing);
    e.vx = -rng.uniform(0.5, 2.5);
    e.vy = rng.uniform(-1.4, 1.4);
    e.confidence = rng.uniform(0.6, 0.98);
    e.id = next_id++;
    encounters.push_back(e);
  }

  std::vector<SimObject> background;
  const auto initial = static_cast<int>(std::lround(rng.uniform(0.0, 2.0 * spec.background_objects)));
  for (int i = 0; i < initial; ++i) {
    background.push_back(spawn_background(rng, layout, 5.0, 70.0));
    background.back().id = next_id++;
  }

  double speed = target_speed(rng, road);
  double cruise = speed;

  struct Frame {
    EgoDynamics ego;
    std::vector<SimObject> visible;
  };
  std::vector<Frame> frames;
  frames.reserve(static_cast<std::size_t>(spec.duration_s));

  for (int step = 0; step < spec.duration_s; ++step) {
    // Ego slows down ahead of a close pedestrian encounter.
    double goal = cruise;
    for (const auto& e : encounters) {
      if (step >= e.center - 3 && step <= e.center + 1) goal = std::min(goal, 3.0);
    }
    if (rng.chance(0.05)) cruise = target_speed(rng, road);
    const double accel = std::clamp(0.4 * (goal - speed) + rng.uniform(-0.6, 0.6), -4.0, 2.5);
    speed = std::max(0.0, speed + accel);

    Frame frame;
    frame.ego.speed_mps = round_to(speed, 0.01);
    frame.ego.accel_mps2 = round_to(accel, 0.01);
    frame.ego.brake = accel < -0.5 ? round_to(std::min(1.0, -accel / 4.0), 0.01) : 0.0;
    frame.ego.steering_deg = round_to(rng.uniform(-3.0, 3.0), 0.1);

    for (auto& o : background) {
      const double ego_shift = o.cls == ObjectClass::person || o.cls == ObjectClass::cyclist ||
                                       o.sidewalk
                                   ? -speed
                                   : 0.0;
      o.x += o.vx + ego_shift;
      o.y += o.vy;
    }
    std::erase_if(background, [](const SimObject& o) { return o.x < -15.0 || o.x > 90.0; });
    const auto wanted = static_cast<std::size_t>(std::lround(spec.background_objects));
    if (background.size() < wanted && rng.chance(0.5)) {
      background.push_back(spawn_background(rng, layout, 40.0, 70.0));
      background.back().id = next_id++;
    }

    frame.visible = background;
    for (const auto& e : encounters) {
      const auto dt = static_cast<double>(step - e.center);
      if (std::abs(dt) > 5.0) continue;
      SimObject p{ObjectClass::person, e.x + e.vx * dt, e.y + e.vy * dt, e.vx, e.vy,
                  e.confidence, false, e.id};
      if (p.x < -3.0) continue;
      frame.visible.push_back(p);
    }
    frames.push_back(std::move(frame));
  }

  std::vector<SceneState> states;
  states.reserve(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    SceneState s;
    s.acquisition_id = acquisition_id;
    s.t = spec.start_t + static_cast<std::int64_t>(i);
    s.ego = frames[i].ego;
    for (const auto& o : frames[i].visible) {
      s.objects.push_back({o.id, o.cls, round_to(std::hypot(o.x, o.y), 0.01),
                           lane_code(layout, o.y, o.sidewalk), round_to(o.confidence, 0.01)});
    }
    std::sort(s.objects.begin(), s.objects.end(),
              [](const TrackedObject& a, const TrackedObject& b) { return a.track_id < b.track_id; });
    s.road = {road, layout.lanes, layout.sidewalk};
    s.environment = {weather, illumination};
    if (spec.images) {
      s.image_ref = "frames/" + acquisition_id + "/" + std::to_string(s.t) + ".jpg";
    }
    states.push_back(std::move(s));
  }
  return states;
}

template <typename Enum>
std::map<Enum, double> weights_from_json(const json& v, const std::string& key,
                                         std::optional<Enum> (*parse)(std::string_view) noexcept) {
  if (!v.is_object()) throw Error(ErrorKind::parse, "expected an object of weights", key);
  std::map<Enum, double> out;
  for (const auto& [name, w] : v.items()) {
    auto e = parse(name);
    if (!e) throw Error(ErrorKind::parse, "unknown category '" + name + "'", key + "." + name);
    if (!w.is_number()) throw Error(ErrorKind::parse, "expected a number", key + "." + name);
    out[*e] = w.template get<double>();
  }
  return out;
}

template <typename Enum>
json weights_to_json(const std::map<Enum, double>& weights) {
  json out = json::object();
  for (const auto& [e, w] : weights) out[std::string(to_string(e))] = w;
  return out;
}

}  // namespace

SynthSpec synth_spec_from_json(const json& value) {
  if (!value.is_object()) throw Error(ErrorKind::parse, "synth spec must be an object", "$");
  SynthSpec spec;
  for (const auto& [key, v] : value.items()) {
    auto need_int = [&]() -> std::int64_t {
      if (!v.is_number_integer()) throw Error(ErrorKind::parse, "expected an integer", key);
      return v.get<std::int64_t>();
    };
    auto need_real = [&]() -> double {
      if (!v.is_number()) throw Error(ErrorKind::parse, "expected a number", key);
      return v.get<double>();
    };
    if (key == "acquisitions") {
      spec.acquisitions = static_cast<int>(need_int());
    } else if (key == "duration_s") {
      spec.duration_s = static_cast<int>(need_int());
    } else if (key == "start_t") {
      spec.start_t = need_int();
    } else if (key == "near_person_m") {
      spec.near_person_m = need_real();
    } else if (key == "encounters_per_minute") {
      spec.encounters_per_minute = need_real();
    } else if (key == "background_objects") {
      spec.background_objects = need_real();
    } else if (key == "weather") {
      spec.weather = weights_from_json<Weather>(v, key, &parse_weather);
    } else if (key == "illumination") {
      spec.illumination = weights_from_json<Illumination>(v, key, &parse_illumination);
    } else if (key == "road_type") {
      spec.road_type = weights_from_json<RoadType>(v, key, &parse_road_type);
    } else if (key == "images") {
      if (!v.is_boolean()) throw Error(ErrorKind::parse, "expected a boolean", key);
      spec.images = v.get<bool>();
    } else {
      throw Error(ErrorKind::parse, "unknown key '" + key + "'", key);
    }
  }
  return spec;
}

json to_json(const SynthSpec& spec) {
  return {{"acquisitions", spec.acquisitions},
          {"duration_s", spec.duration_s},
          {"start_t", spec.start_t},
          {"near_person_m", spec.near_person_m},
          {"encounters_per_minute", spec.encounters_per_minute},
          {"background_objects", spec.background_objects},
          {"weather", weights_to_json(spec.weather)},
          {"illumination", weights_to_json(spec.illumination)},
          {"road_type", weights_to_json(spec.road_type)},
          {"images", spec.images}};
}

std::vector<SceneState> synthesize_states(std::uint64_t seed, const SynthSpec& spec) {
  validate(spec);
  Draw rng(seed);
  std::vector<SceneState> out;
  for (int a = 0; a < spec.acquisitions; ++a) {
    char suffix[16];
    std::snprintf(suffix, sizeof suffix, "%03d", a);
    const std::string id = "syn" + std::to_string(seed) + "-" + suffix;
    auto states = synthesize_acquisition(rng, spec, id);
    std::move(states.begin(), states.end(), std::back_inserter(out));
  }
  return out;
}

std::string synthesize(std::uint64_t seed, const SynthSpec& spec) {
  std::string out;
  for (const auto& s : synthesize_states(seed, spec)) {
    out += canonical_line(s);
    out += '\n';
  }
  return out;
}

}  // namespace audit
