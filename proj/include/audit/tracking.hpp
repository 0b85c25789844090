#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "audit/scene.hpp"

namespace audit {

/// Detector output in the ego frame: x forward, y lateral (positive = left), meters.
struct Detection {
  double x = 0.0;
  double y = 0.0;
  ObjectClass object_class = ObjectClass::other;
  double confidence = 0.0;
};

using DetectionFrame = std::vector<Detection>;

inline constexpr double kDefaultLaneWidthM = 3.5;

/// Persistent identity per detection, indexed [frame][detection] in input order.
///
/// Greedy nearest neighbour with class gating: in each frame, every
/// (track alive in the previous frame, detection) pair of equal class whose
/// Euclidean gap is within `gate_m` is a candidate; candidates are accepted in
/// ascending (gap, track_id, detection index) order while both sides are still
/// free. Leftover detections open new tracks with the next unused id. Tracks
/// not observed in a frame are dropped.
std::vector<std::vector<std::uint32_t>> assign_track_ids(std::span<const DetectionFrame> frames,
                                                         double gate_m);

/// Same association, emitted as TrackedObject sets sorted by track_id.
/// dist_m is the planar range, lane_rel is derived from the lateral offset.
std::vector<std::vector<TrackedObject>> associate_tracks(std::span<const DetectionFrame> frames,
                                                         double gate_m,
                                                         double lane_width_m = kDefaultLaneWidthM);

/// Lateral offset to lane code: left is negative; beyond two lanes maps to 9.
int lane_rel_from_lateral(double y, double lane_width_m = kDefaultLaneWidthM);

}  // namespace audit
