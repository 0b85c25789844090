#include "audit/window.hpp"

#include <algorithm>

#include "audit/digest.hpp"
#include "audit/error.hpp"

namespace audit {

namespace {

// 64-bit prefix of the content digest; short enough for report rows.
constexpr std::size_t kWindowIdHexChars = 16;

void check_extents(int k, int m) {
  if (k < 0) throw Error(ErrorKind::parameter, "k must be non-negative", "k");
  if (m < 0) throw Error(ErrorKind::parameter, "m must be non-negative", "m");
}

}  // namespace

ScenarioWindow build_window(const SceneStore& store, const Anchor& anchor, int k, int m) {
  check_extents(k, m);
  if (store.find(anchor.acquisition_id, anchor.t0) == nullptr) {
    throw Error(ErrorKind::not_found,
                "anchor (" + anchor.acquisition_id + ", " + std::to_string(anchor.t0) +
                    ") is not in the store",
                "anchor");
  }
  ScenarioWindow w;
  w.anchor = anchor;
  w.k = k;
  w.m = m;
  const auto states = store.get_states(anchor.acquisition_id, anchor.t0 - k, anchor.t0 + m);
  w.states.assign(states.begin(), states.end());
  for (const auto& s : w.states) {
    if (s.image_ref) w.image_refs.push_back(*s.image_ref);
  }
  w.expected_seconds = static_cast<std::size_t>(k) + static_cast<std::size_t>(m) + 1;
  w.completeness = static_cast<double>(w.states.size()) / static_cast<double>(w.expected_seconds);
  w.window_id = compute_window_id(w);
  return w;
}

json to_json(const Anchor& anchor) {
  json out = {{"acq", anchor.acquisition_id}, {"t0", anchor.t0}};
  if (anchor.label) out["label"] = *anchor.label;
  return out;
}

Anchor anchor_from_json(const json& value, const std::string& path) {
  const std::string base = path.empty() ? "" : path + ".";
  if (!value.is_object()) throw Error(ErrorKind::parse, "anchor must be an object", path);
  Anchor a;
  for (const auto& [key, v] : value.items()) {
    if (key == "acq") {
      if (!v.is_string()) throw Error(ErrorKind::parse, "expected a string", base + key);
      a.acquisition_id = v.get<std::string>();
    } else if (key == "t0") {
      if (!v.is_number_integer()) throw Error(ErrorKind::parse, "expected an integer", base + key);
      a.t0 = v.get<std::int64_t>();
    } else if (key == "label") {
      if (!v.is_string()) throw Error(ErrorKind::parse, "expected a string", base + key);
      a.label = v.get<std::string>();
    } else {
      throw Error(ErrorKind::parse, "unknown key '" + key + "'", base + key);
    }
  }
  if (a.acquisition_id.empty()) throw Error(ErrorKind::parse, "missing acq", base + "acq");
  if (!value.contains("t0")) throw Error(ErrorKind::parse, "missing t0", base + "t0");
  return a;
}

json window_content_json(const ScenarioWindow& w) {
  json states = json::array();
  for (const auto& s : w.states) states.push_back(to_json(s));
  return {{"anchor", to_json(w.anchor)},
          {"k", w.k},
          {"m", w.m},
          {"states", std::move(states)},
          {"image_refs", w.image_refs},
          {"expected_seconds", w.expected_seconds},
          {"present_seconds", w.states.size()}};
}

std::string compute_window_id(const ScenarioWindow& window) {
  return sha256_hex(window_content_json(window).dump()).substr(0, kWindowIdHexChars);
}

json to_json(const ScenarioWindow& window) {
  json out = window_content_json(window);
  out["window_id"] = window.window_id;
  out["completeness"] = window.completeness;
  return out;
}

ScenarioWindow window_from_json(const json& value) {
  if (!value.is_object()) throw Error(ErrorKind::parse, "window must be an object", "$");
  ScenarioWindow w;
  try {
    w.window_id = value.at("window_id").get<std::string>();
    w.anchor = anchor_from_json(value.at("anchor"), "anchor");
    w.k = value.at("k").get<int>();
    w.m = value.at("m").get<int>();
    const json& states = value.at("states");
    for (std::size_t i = 0; i < states.size(); ++i) {
      try {
        w.states.push_back(scene_state_from_json(states[i]));
      } catch (const Error& e) {
        throw Error(e.kind(), e.message(),
                    "states[" + std::to_string(i) + "]." + e.field_path());
      }
    }
    w.image_refs = value.at("image_refs").get<std::vector<std::string>>();
    w.expected_seconds = value.at("expected_seconds").get<std::size_t>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, std::string("malformed window: ") + e.what());
  }
  check_extents(w.k, w.m);
  w.completeness = w.expected_seconds == 0
                       ? 0.0
                       : static_cast<double>(w.states.size()) /
                             static_cast<double>(w.expected_seconds);
  const std::string recomputed = compute_window_id(w);
  if (recomputed != w.window_id) {
    throw Error(ErrorKind::integrity,
                "window " + w.window_id + " does not match its content (recomputed " +
                    recomputed + ")",
                "window_id");
  }
  return w;
}

bool is_valid_collection_id(const std::string& id) {
  if (id.empty() || id.size() > 128 || id.front() == '.') return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c == '-' || c == '_' || c == '.';
  });
}

json to_json(const Collection& c) {
  json anchors = json::array();
  for (const auto& a : c.anchors) anchors.push_back(to_json(a));
  json embedded = json::array();
  for (const auto& id : c.window_ids) {
    if (auto it = c.windows.find(id); it != c.windows.end()) embedded.push_back(to_json(it->second));
  }
  return {{"collection_id", c.collection_id},
          {"name", c.name},
          {"anchors", std::move(anchors)},
          {"windows", c.window_ids},
          {"embedded", std::move(embedded)}};
}

Collection collection_from_json(const json& value) {
  if (!value.is_object()) throw Error(ErrorKind::parse, "collection must be an object", "$");
  Collection c;
  try {
    c.collection_id = value.at("collection_id").get<std::string>();
    c.name = value.at("name").get<std::string>();
    const json& anchors = value.at("anchors");
    for (std::size_t i = 0; i < anchors.size(); ++i) {
      c.anchors.push_back(anchor_from_json(anchors[i], "anchors[" + std::to_string(i) + "]"));
    }
    c.window_ids = value.at("windows").get<std::vector<std::string>>();
    for (const json& w : value.at("embedded")) {
      auto window = window_from_json(w);
      c.windows.emplace(window.window_id, std::move(window));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, std::string("malformed collection: ") + e.what());
  }
  return c;
}

void add_window(Collection& collection, ScenarioWindow window) {
  const std::string id = window.window_id;
  if (collection.windows.contains(id) ||
      std::find(collection.window_ids.begin(), collection.window_ids.end(), id) !=
          collection.window_ids.end()) {
    throw Error(ErrorKind::conflict,
                "window " + id + " already present in collection " + collection.collection_id);
  }
  collection.window_ids.push_back(id);
  collection.windows.emplace(id, std::move(window));
}

void rebuild_windows(Collection& collection, const SceneStore& store, int k, int m) {
  Collection next = collection;
  next.window_ids.clear();
  next.windows.clear();
  for (const auto& anchor : collection.anchors) add_window(next, build_window(store, anchor, k, m));
  collection = std::move(next);
}

std::vector<ScenarioWindow> consume_collection(const Collection& collection,
                                               const SceneStore& store) {
  std::vector<ScenarioWindow> out;
  out.reserve(collection.window_ids.size());
  for (const auto& id : collection.window_ids) {
    auto it = collection.windows.find(id);
    if (it == collection.windows.end()) {
      throw Error(ErrorKind::integrity, "dangling window id " + id, id);
    }
    const ScenarioWindow& w = it->second;
    if (compute_window_id(w) != id) {
      throw Error(ErrorKind::integrity, "window " + id + " does not match its content", id);
    }
    if (store.find(w.anchor.acquisition_id, w.anchor.t0) == nullptr) {
      throw Error(ErrorKind::integrity, "window " + id + " anchor is missing from the store", id);
    }
    out.push_back(w);
  }
  return out;
}

std::vector<Anchor> promote_hits(const ScenarioContext& context, const SceneStore& store,
                                 std::size_t count, int k, int m) {
  check_extents(k, m);
  std::vector<Anchor> out;
  std::map<std::string, std::int64_t> last_kept;
  const auto span = static_cast<std::size_t>(k) + static_cast<std::size_t>(m) + 1;
  for (const auto& hit : context.hits) {
    if (out.size() >= count) break;
    if (!store.has_acquisition(hit.acquisition_id)) continue;
    if (auto it = last_kept.find(hit.acquisition_id);
        it != last_kept.end() && hit.t - it->second <= static_cast<std::int64_t>(k + m)) {
      continue;
    }
    if (store.get_states(hit.acquisition_id, hit.t - k, hit.t + m).size() != span) continue;
    out.push_back({hit.acquisition_id, hit.t, "S" + std::to_string(out.size() + 1)});
    last_kept[hit.acquisition_id] = hit.t;
  }
  return out;
}

}  // namespace audit
