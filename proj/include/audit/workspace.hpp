#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "audit/model_spec.hpp"
#include "audit/prompt.hpp"
#include "audit/report.hpp"
#include "audit/runner.hpp"
#include "audit/scene_store.hpp"
#include "audit/window.hpp"

namespace audit {

/// Run lifecycle as persisted in runs/<id>/status.json.
enum class RunState { queued, running, complete, failed };

std::string_view to_string(RunState state) noexcept;

struct RunStatusInfo {
  std::string run_id;
  RunState state = RunState::queued;
  std::string error;
  std::size_t records = 0;
};

json to_json(const RunStatusInfo& status);

/// On-disk layout of a store directory:
///   states.jsonl                 canonical scene states
///   collections/<id>.json        collections with embedded windows
///   runs/<run_id>/run.json       collection, prompt and window ids of the run
///   runs/<run_id>/models.json    model spec snapshot
///   runs/<run_id>/records.jsonl  append-only run log
///   runs/<run_id>/assessments.jsonl, rejections.jsonl
///   runs/<run_id>/status.json
class Workspace {
 public:
  explicit Workspace(std::filesystem::path root);

  const std::filesystem::path& root() const noexcept { return root_; }
  std::filesystem::path states_path() const;
  std::filesystem::path collection_path(const std::string& collection_id) const;
  std::filesystem::path run_dir(const std::string& run_id) const;

  bool has_store() const;
  /// Throws not_found when the store has not been ingested.
  SceneStore load_store() const;
  void save_store(const SceneStore& store) const;
  /// Merges the files into the existing store (duplicate keys are errors).
  SceneStore ingest(const std::vector<std::filesystem::path>& files) const;

  bool has_collection(const std::string& collection_id) const;
  Collection load_collection(const std::string& collection_id) const;
  void save_collection(const Collection& collection) const;
  std::vector<std::string> collection_ids() const;

  /// Validates everything a run needs, then writes run.json, models.json and
  /// a queued status. Nothing is dispatched.
  std::string create_run(const std::string& collection_id, const std::vector<ModelSpec>& models,
                         const PromptSpec& prompt, const std::string& run_id = {}) const;

  /// Dispatches a created run through execute_run, appending to records.jsonl,
  /// then persists parsed assessments and rejections.
  RunSummary execute_created_run(const std::string& run_id, const SceneStore& store,
                                 RunOptions options = {}) const;

  bool has_run(const std::string& run_id) const;
  RunStatusInfo run_status(const std::string& run_id) const;
  void set_run_status(const RunStatusInfo& status) const;
  std::vector<RunRecord> load_records(const std::string& run_id) const;
  std::vector<ModelSpec> load_run_models(const std::string& run_id) const;

  /// Report of a completed run; identical bytes for the CLI and the service.
  ReportBundle report(const std::string& run_id, const ReportOptions& options = {}) const;

 private:
  std::filesystem::path root_;
};

/// Writes report_json to `out` and every CSV next to it.
void write_report(const ReportBundle& bundle, const std::filesystem::path& out);

json read_json_file(const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);
/// Write to a sibling temporary, then rename into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace audit
