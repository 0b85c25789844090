#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "audit/model_spec.hpp"
#include "audit/prompt.hpp"
#include "audit/remote_client.hpp"
#include "audit/run_record.hpp"

namespace audit {

class ModelBackend {
 public:
  virtual ~ModelBackend() = default;
  virtual BackendReply respond(const RenderedPrompt& prompt, const ScenarioWindow& window) = 0;
};

/// Mock personas answer in-process; remote kinds go through remote_chat_call.
std::unique_ptr<ModelBackend> make_backend(const ModelSpec& spec,
                                           const std::filesystem::path& image_root = {});

using BackendFactory = std::function<std::unique_ptr<ModelBackend>(const ModelSpec&)>;

/// Receives records from concurrent workers. Implementations must be thread-safe.
class RecordSink {
 public:
  virtual ~RecordSink() = default;
  virtual void append(const RunRecord& record) = 0;
};

class MemorySink final : public RecordSink {
 public:
  void append(const RunRecord& record) override;
  std::vector<RunRecord> records() const;

 private:
  mutable std::mutex mutex_;
  std::vector<RunRecord> records_;
};

/// Appends one JSON line per record and flushes after each write.
class JsonlSink final : public RecordSink {
 public:
  explicit JsonlSink(const std::filesystem::path& path);
  void append(const RunRecord& record) override;

 private:
  std::mutex mutex_;
  std::ofstream out_;
};

struct RunOptions {
  std::string run_id;                   // generated when empty
  std::optional<int> parallel;          // caps every model's max_parallel
  std::optional<std::uint64_t> shuffle_seed;  // permutes dispatch order
  std::filesystem::path image_root;     // base for relative image_ref paths
  BackendFactory backend_factory;       // defaults to make_backend
};

struct RunSummary {
  std::string run_id;
  std::size_t records = 0;
  std::map<std::string, std::map<RunStatus, std::size_t>> status_by_model;
};

std::string new_run_id();

/// One record per distinct (window, model, prompt) triple. Model specs are
/// validated and credentials checked before anything is dispatched; a
/// failing triple is recorded with its status and never stops the run.
RunSummary execute_run(std::span<const ScenarioWindow> windows, std::span<const ModelSpec> models,
                       std::span<const PromptSpec> prompts, RecordSink& sink,
                       const RunOptions& options = {});

}  // namespace audit
