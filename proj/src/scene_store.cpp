#include "audit/scene_store.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <sstream>

#include "audit/error.hpp"

namespace audit {

std::vector<AcquisitionSummary> SceneStore::acquisitions() const {
  std::vector<AcquisitionSummary> out;
  out.reserve(by_acquisition_.size());
  for (const auto& [id, states] : by_acquisition_) {
    out.push_back({id, states.front().t, states.back().t, states.size()});
  }
  return out;
}

bool SceneStore::has_acquisition(const std::string& acquisition_id) const {
  return by_acquisition_.contains(acquisition_id);
}

std::span<const SceneState> SceneStore::states_of(const std::string& acquisition_id) const {
  auto it = by_acquisition_.find(acquisition_id);
  if (it == by_acquisition_.end()) {
    throw Error(ErrorKind::not_found, "unknown acquisition '" + acquisition_id + "'");
  }
  return it->second;
}

std::span<const SceneState> SceneStore::get_states(const std::string& acquisition_id,
                                                   std::int64_t t_from,
                                                   std::int64_t t_to) const {
  if (t_from > t_to) {
    throw Error(ErrorKind::parameter,
                "t_from " + std::to_string(t_from) + " exceeds t_to " + std::to_string(t_to),
                "t_from");
  }
  const auto all = states_of(acquisition_id);
  auto lo = std::lower_bound(all.begin(), all.end(), t_from,
                             [](const SceneState& s, std::int64_t t) { return s.t < t; });
  auto hi = std::upper_bound(lo, all.end(), t_to,
                             [](std::int64_t t, const SceneState& s) { return t < s.t; });
  return {lo, hi};
}

const SceneState* SceneStore::find(const std::string& acquisition_id, std::int64_t t) const {
  auto it = by_acquisition_.find(acquisition_id);
  if (it == by_acquisition_.end()) return nullptr;
  const auto& states = it->second;
  auto pos = std::lower_bound(states.begin(), states.end(), t,
                              [](const SceneState& s, std::int64_t v) { return s.t < v; });
  if (pos == states.end() || pos->t != t) return nullptr;
  return &*pos;
}

void SceneStore::write_snapshot(std::ostream& out) const {
  for_each([&](const SceneState& s) { out << canonical_line(s) << '\n'; });
}

std::string SceneStore::snapshot() const {
  std::ostringstream out;
  write_snapshot(out);
  return out.str();
}

SceneStoreBuilder::SceneStoreBuilder(const SceneStore& seed) {
  seed.for_each([&](const SceneState& s) { states_[s.acquisition_id].emplace(s.t, s); });
}

void SceneStoreBuilder::add_lines(std::istream& in) {
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json parsed = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (parsed.is_discarded()) {
      throw IngestError(ErrorKind::parse, number, "line is not valid JSON", "$");
    }
    SceneState state;
    try {
      state = scene_state_from_json(parsed);
    } catch (const Error& e) {
      throw IngestError(e.kind(), number, e.message(), e.field_path());
    }
    add_at_line(std::move(state), number);
  }
}

void SceneStoreBuilder::add(SceneState state) { add_at_line(std::move(state), 0); }

void SceneStoreBuilder::add_at_line(SceneState state, std::size_t line) {
  auto& per_acq = states_[state.acquisition_id];
  const std::int64_t t = state.t;
  if (!per_acq.emplace(t, std::move(state)).second) {
    const std::string msg = "duplicate key (" + per_acq.at(t).acquisition_id + ", " +
                            std::to_string(t) + ")";
    if (line != 0) throw IngestError(ErrorKind::duplicate_key, line, msg, "t");
    throw Error(ErrorKind::duplicate_key, msg, "t");
  }
}

SceneStore SceneStoreBuilder::build() && {
  SceneStore store;
  for (auto& [id, per_t] : states_) {
    if (per_t.empty()) continue;
    auto& dst = store.by_acquisition_[id];
    dst.reserve(per_t.size());
    for (auto& [_, s] : per_t) dst.push_back(std::move(s));
    store.size_ += dst.size();
  }
  states_.clear();
  return store;
}

SceneStore ingest(std::istream& lines) {
  SceneStoreBuilder builder;
  builder.add_lines(lines);
  return std::move(builder).build();
}

SceneStore ingest_files(const std::vector<std::filesystem::path>& files,
                        const SceneStore& existing) {
  SceneStoreBuilder builder(existing);
  for (const auto& path : files) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
    try {
      builder.add_lines(in);
    } catch (const IngestError& e) {
      throw Error(e.kind(), path.filename().string() + ": " + e.message(), e.field_path());
    }
  }
  return std::move(builder).build();
}

}  // namespace audit
