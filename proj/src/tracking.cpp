#include "audit/tracking.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "audit/error.hpp"

namespace audit {

namespace {

struct Candidate {
  double gap;
  std::uint32_t track_id;
  std::size_t detection;
  std::size_t prior_index;
};

struct LiveTrack {
  std::uint32_t id;
  Detection last;
};

}  // namespace

std::vector<std::vector<std::uint32_t>> assign_track_ids(std::span<const DetectionFrame> frames,
                                                         double gate_m) {
  if (!(gate_m > 0.0) || !std::isfinite(gate_m)) {
    throw Error(ErrorKind::parameter, "gate_m must be a positive finite distance", "gate_m");
  }
  for (std::size_t f = 0; f < frames.size(); ++f) {
    for (std::size_t d = 0; d < frames[f].size(); ++d) {
      const auto& det = frames[f][d];
      if (!std::isfinite(det.x) || !std::isfinite(det.y)) {
        throw Error(ErrorKind::parameter, "detection has non-finite coordinates",
                    "frames[" + std::to_string(f) + "][" + std::to_string(d) + "]");
      }
    }
  }

  std::vector<std::vector<std::uint32_t>> ids;
  ids.reserve(frames.size());
  std::vector<LiveTrack> live;
  std::uint32_t next_id = 0;

  for (const auto& frame : frames) {
    std::vector<Candidate> candidates;
    for (std::size_t p = 0; p < live.size(); ++p) {
      for (std::size_t d = 0; d < frame.size(); ++d) {
        if (live[p].last.object_class != frame[d].object_class) continue;
        const double gap = std::hypot(frame[d].x - live[p].last.x, frame[d].y - live[p].last.y);
        if (gap <= gate_m) candidates.push_back({gap, live[p].id, d, p});
      }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
      return std::tie(a.gap, a.track_id, a.detection) < std::tie(b.gap, b.track_id, b.detection);
    });

    constexpr std::uint32_t kUnassigned = UINT32_MAX;
    std::vector<std::uint32_t> frame_ids(frame.size(), kUnassigned);
    std::vector<bool> prior_used(live.size(), false);
    for (const auto& c : candidates) {
      if (prior_used[c.prior_index] || frame_ids[c.detection] != kUnassigned) continue;
      prior_used[c.prior_index] = true;
      frame_ids[c.detection] = c.track_id;
    }
    for (auto& id : frame_ids) {
      if (id == kUnassigned) id = next_id++;
    }

    live.clear();
    for (std::size_t d = 0; d < frame.size(); ++d) live.push_back({frame_ids[d], frame[d]});
    ids.push_back(std::move(frame_ids));
  }
  return ids;
}

int lane_rel_from_lateral(double y, double lane_width_m) {
  const long lane = std::lround(-y / lane_width_m);
  if (lane < -2 || lane > 2) return kLaneRelOffRoad;
  return static_cast<int>(lane);
}

std::vector<std::vector<TrackedObject>> associate_tracks(std::span<const DetectionFrame> frames,
                                                         double gate_m, double lane_width_m) {
  const auto ids = assign_track_ids(frames, gate_m);
  std::vector<std::vector<TrackedObject>> out;
  out.reserve(frames.size());
  for (std::size_t f = 0; f < frames.size(); ++f) {
    std::vector<TrackedObject> objects;
    objects.reserve(frames[f].size());
    for (std::size_t d = 0; d < frames[f].size(); ++d) {
      const auto& det = frames[f][d];
      objects.push_back({ids[f][d], det.object_class, std::hypot(det.x, det.y),
                         lane_rel_from_lateral(det.y, lane_width_m), det.confidence});
    }
    std::sort(objects.begin(), objects.end(),
              [](const TrackedObject& a, const TrackedObject& b) { return a.track_id < b.track_id; });
    out.push_back(std::move(objects));
  }
  return out;
}

}  // namespace audit
