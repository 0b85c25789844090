#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "audit/scene.hpp"

namespace audit {

/// Parameters of the synthetic acquisition generator. Distributions are
/// relative weights over the closed enumerations; absent entries weigh zero.
struct SynthSpec {
  int acquisitions = 1;
  int duration_s = 60;
  std::int64_t start_t = 1'700'000'000;
  double near_person_m = 10.0;
  double encounters_per_minute = 2.0;
  double background_objects = 4.0;
  std::map<Weather, double> weather{{Weather::clear, 0.6}, {Weather::overcast, 0.2},
                                    {Weather::rain, 0.15}, {Weather::fog, 0.05}};
  std::map<Illumination, double> illumination{
      {Illumination::day, 0.7}, {Illumination::dusk, 0.15}, {Illumination::night, 0.15}};
  std::map<RoadType, double> road_type{{RoadType::residential, 0.45},
                                       {RoadType::arterial, 0.3},
                                       {RoadType::intersection, 0.2},
                                       {RoadType::highway, 0.05}};
  bool images = false;
};

inline constexpr int kMinSynthDurationS = 7;

SynthSpec synth_spec_from_json(const json& value);
json to_json(const SynthSpec& spec);

/// Seeded generation. Identical (seed, spec) yields identical states on a
/// given platform. Every acquisition contains at least one second where a
/// person is within spec.near_person_m. Throws parameter for duration_s < 7.
std::vector<SceneState> synthesize_states(std::uint64_t seed, const SynthSpec& spec);

/// synthesize_states rendered as ingest JSONL (one canonical line per state).
std::string synthesize(std::uint64_t seed, const SynthSpec& spec);

}  // namespace audit
