#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "audit/scene.hpp"

namespace audit {

struct AcquisitionSummary {
  std::string acquisition_id;
  std::int64_t t_min = 0;
  std::int64_t t_max = 0;
  std::size_t state_count = 0;

  bool operator==(const AcquisitionSummary&) const = default;
};

/// Immutable normalized 1 Hz layer. States are grouped by acquisition and held
/// in ascending t, so every range read is a contiguous span.
class SceneStore {
 public:
  SceneStore() = default;

  std::size_t size() const noexcept { return size_; }
  bool empty() const noexcept { return size_ == 0; }

  std::vector<AcquisitionSummary> acquisitions() const;
  bool has_acquisition(const std::string& acquisition_id) const;

  /// States with t in [t_from, t_to], ascending. Missing seconds are simply absent.
  /// Throws not_found for an unknown acquisition and parameter for t_from > t_to.
  std::span<const SceneState> get_states(const std::string& acquisition_id, std::int64_t t_from,
                                         std::int64_t t_to) const;

  /// All states of one acquisition (not_found if unknown).
  std::span<const SceneState> states_of(const std::string& acquisition_id) const;

  const SceneState* find(const std::string& acquisition_id, std::int64_t t) const;

  /// Visits every state in ascending (acquisition_id, t) order.
  template <typename Fn>
  void for_each(Fn&& fn) const {
    for (const auto& [_, states] : by_acquisition_) {
      for (const auto& s : states) fn(s);
    }
  }

  /// Canonical snapshot: one canonical_line per state, ascending, newline-terminated.
  void write_snapshot(std::ostream& out) const;
  std::string snapshot() const;

 private:
  friend class SceneStoreBuilder;

  std::map<std::string, std::vector<SceneState>> by_acquisition_;
  std::size_t size_ = 0;
};

/// Single-writer accumulator. Lines may arrive in any order; a repeated
/// (acquisition_id, t) is rejected with duplicate_key.
class SceneStoreBuilder {
 public:
  SceneStoreBuilder() = default;
  explicit SceneStoreBuilder(const SceneStore& seed);

  /// Parses JSONL. Blank lines are skipped; errors carry the 1-based line number.
  void add_lines(std::istream& in);
  void add(SceneState state);

  SceneStore build() &&;

 private:
  void add_at_line(SceneState state, std::size_t line);

  std::map<std::string, std::map<std::int64_t, SceneState>> states_;
};

SceneStore ingest(std::istream& lines);
SceneStore ingest_files(const std::vector<std::filesystem::path>& files,
                        const SceneStore& existing = {});

}  // namespace audit
