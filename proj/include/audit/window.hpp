#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "audit/query.hpp"
#include "audit/scene_store.hpp"

namespace audit {

inline constexpr int kDefaultPreSeconds = 3;
inline constexpr int kDefaultPostSeconds = 3;

struct Anchor {
  std::string acquisition_id;
  std::int64_t t0 = 0;
  std::optional<std::string> label;

  bool operator==(const Anchor&) const = default;
};

/// States over [t0 - k, t0 + m]. `window_id` is derived from every other
/// field, so identical content always yields the identical id.
struct ScenarioWindow {
  std::string window_id;
  Anchor anchor;
  int k = kDefaultPreSeconds;
  int m = kDefaultPostSeconds;
  std::vector<SceneState> states;
  std::vector<std::string> image_refs;
  std::size_t expected_seconds = 0;  // k + m + 1
  double completeness = 0.0;         // states.size() / expected_seconds

  std::int64_t t_from() const noexcept { return anchor.t0 - k; }
  std::int64_t t_to() const noexcept { return anchor.t0 + m; }
  bool operator==(const ScenarioWindow&) const = default;
};

/// Throws not_found when the anchor second is not stored and parameter for negative extents.
ScenarioWindow build_window(const SceneStore& store, const Anchor& anchor,
                            int k = kDefaultPreSeconds, int m = kDefaultPostSeconds);

/// Everything except window_id, canonical key order.
json window_content_json(const ScenarioWindow& window);
std::string compute_window_id(const ScenarioWindow& window);

json to_json(const ScenarioWindow& window);
json to_json(const Anchor& anchor);
Anchor anchor_from_json(const json& value, const std::string& path = "");

/// Parses an embedded window and checks that its id recomputes from content
/// (integrity error otherwise).
ScenarioWindow window_from_json(const json& value);

/// A curated, ordered grouping of windows. The persisted document embeds the
/// canonical windows next to the ordered id list.
struct Collection {
  std::string collection_id;
  std::string name;
  std::vector<Anchor> anchors;
  std::vector<std::string> window_ids;
  std::map<std::string, ScenarioWindow> windows;

  bool operator==(const Collection&) const = default;
};

/// Letters, digits, '-', '_' and '.'; 1..128 characters; not starting with '.'.
bool is_valid_collection_id(const std::string& id);

json to_json(const Collection& collection);
Collection collection_from_json(const json& value);

/// Appends a built window. A repeated window id is a conflict.
void add_window(Collection& collection, ScenarioWindow window);

/// Rebuilds the window list from the collection's anchors, in anchor order.
void rebuild_windows(Collection& collection, const SceneStore& store, int k, int m);

/// Materializes the windows in collection order. A listed id without an
/// embedded window, an embedded window whose id does not recompute, or an
/// anchor absent from the store is an integrity error naming the id.
std::vector<ScenarioWindow> consume_collection(const Collection& collection,
                                               const SceneStore& store);

/// Promotes query hits to anchors: walks the hits in order and keeps a hit
/// when its whole [t - k, t + m] span is stored and it does not overlap the
/// previously kept window of the same acquisition. Stops after `count`.
/// Anchors are labelled S1, S2, ... in promotion order.
std::vector<Anchor> promote_hits(const ScenarioContext& context, const SceneStore& store,
                                 std::size_t count, int k = kDefaultPreSeconds,
                                 int m = kDefaultPostSeconds);

}  // namespace audit
