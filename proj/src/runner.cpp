#include "audit/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <random>
#include <set>
#include <thread>

#include "audit/error.hpp"
#include "audit/persona.hpp"
#include "audit/text_format.hpp"

namespace audit {

namespace {

class PersonaBackend final : public ModelBackend {
 public:
  explicit PersonaBackend(PersonaRules rules) : rules_(std::move(rules)) {}

  BackendReply respond(const RenderedPrompt& prompt, const ScenarioWindow& window) override {
    BackendReply reply;
    reply.raw_response = mock_persona_respond(prompt, window, rules_);
    reply.token_usage = estimate_token_usage(prompt.text, reply.raw_response);
    return reply;
  }

 private:
  PersonaRules rules_;
};

class RemoteBackend final : public ModelBackend {
 public:
  RemoteBackend(ModelSpec spec, std::filesystem::path image_root)
      : spec_(std::move(spec)), image_root_(std::move(image_root)) {}

  BackendReply respond(const RenderedPrompt& prompt, const ScenarioWindow&) override {
    return remote_chat_call(prompt, spec_, image_root_);
  }

 private:
  ModelSpec spec_;
  std::filesystem::path image_root_;
};

// Spaces successive request starts of one model by at least min_interval.
class Throttle {
 public:
  explicit Throttle(int min_interval_ms) : interval_(min_interval_ms) {}

  void wait() {
    if (interval_.count() <= 0) return;
    std::chrono::steady_clock::time_point slot;
    {
      std::lock_guard lock(mutex_);
      const auto now = std::chrono::steady_clock::now();
      slot = std::max(now, next_);
      next_ = slot + interval_;
    }
    std::this_thread::sleep_until(slot);
  }

 private:
  std::chrono::milliseconds interval_;
  std::mutex mutex_;
  std::chrono::steady_clock::time_point next_{};
};

struct Task {
  std::size_t window;
  std::size_t prompt;
};

}  // namespace

std::unique_ptr<ModelBackend> make_backend(const ModelSpec& spec,
                                           const std::filesystem::path& image_root) {
  if (spec.kind == ModelKind::mock_persona) return std::make_unique<PersonaBackend>(*spec.persona);
  return std::make_unique<RemoteBackend>(spec, image_root);
}

void MemorySink::append(const RunRecord& record) {
  std::lock_guard lock(mutex_);
  records_.push_back(record);
}

std::vector<RunRecord> MemorySink::records() const {
  std::lock_guard lock(mutex_);
  return records_;
}

JsonlSink::JsonlSink(const std::filesystem::path& path) : out_(path, std::ios::app) {
  if (!out_) throw Error(ErrorKind::io, "cannot open " + path.string() + " for appending");
}

void JsonlSink::append(const RunRecord& record) {
  const std::string line = to_json(record).dump() + "\n";
  std::lock_guard lock(mutex_);
  out_ << line;
  out_.flush();
  if (!out_) throw Error(ErrorKind::io, "write to record log failed");
}

std::string new_run_id() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t secs = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y%m%dT%H%M%SZ", &tm);
  std::random_device rd;
  char suffix[9];
  std::snprintf(suffix, sizeof suffix, "%08x", static_cast<unsigned>(rd()));
  return std::string("run-") + stamp + "-" + suffix;
}

RunSummary execute_run(std::span<const ScenarioWindow> windows, std::span<const ModelSpec> models,
                       std::span<const PromptSpec> prompts, RecordSink& sink,
                       const RunOptions& options) {
  if (models.empty()) throw Error(ErrorKind::parameter, "a run needs at least one model", "models");
  if (prompts.empty()) throw Error(ErrorKind::parameter, "a run needs at least one prompt", "prompt");
  if (options.parallel && *options.parallel < 1) {
    throw Error(ErrorKind::parameter, "parallel must be a positive integer", "parallel");
  }
  std::set<std::string> model_ids;
  for (const auto& spec : models) {
    try {
      validate(spec);
    } catch (const Error& e) {
      throw Error(e.kind(), "model " + spec.model_id + ": " + e.message(), e.field_path());
    }
    if (!model_ids.insert(spec.model_id).second) {
      throw Error(ErrorKind::configuration, "duplicate model id '" + spec.model_id + "'",
                  "model_id");
    }
    check_credentials(spec);
  }

  // Distinct windows and prompts so each triple occurs once.
  std::vector<std::size_t> window_idx, prompt_idx;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    if (seen.insert(windows[i].window_id).second) window_idx.push_back(i);
  }
  seen.clear();
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    auto h = prompts[i].prompt_hash();
    if (seen.insert(h).second) prompt_idx.push_back(i);
  }

  // Rendering is done once up front; workers only read.
  std::map<std::pair<std::size_t, std::size_t>, RenderedPrompt> rendered;
  std::vector<Task> tasks;
  for (std::size_t w : window_idx) {
    for (std::size_t p : prompt_idx) {
      rendered.emplace(std::pair{w, p}, render_prompt(windows[w], prompts[p]));
      tasks.push_back({w, p});
    }
  }

  RunSummary summary;
  summary.run_id = options.run_id.empty() ? new_run_id() : options.run_id;

  struct ModelLane {
    const ModelSpec* spec;
    std::vector<Task> tasks;
    std::atomic<std::size_t> next{0};
    std::unique_ptr<Throttle> throttle;
    std::mutex mutex;
    std::map<RunStatus, std::size_t> counts;
  };
  std::vector<std::unique_ptr<ModelLane>> lanes;
  std::mt19937_64 rng(options.shuffle_seed.value_or(0));
  for (const auto& spec : models) {
    auto lane = std::make_unique<ModelLane>();
    lane->spec = &spec;
    lane->tasks = tasks;
    if (options.shuffle_seed) std::shuffle(lane->tasks.begin(), lane->tasks.end(), rng);
    lane->throttle = std::make_unique<Throttle>(spec.min_interval_ms);
    lanes.push_back(std::move(lane));
  }

  const BackendFactory factory =
      options.backend_factory ? options.backend_factory : [&](const ModelSpec& spec) {
        return make_backend(spec, options.image_root);
      };

  auto drain = [&](ModelLane& lane) {
    auto backend = factory(*lane.spec);
    for (;;) {
      const std::size_t i = lane.next.fetch_add(1);
      if (i >= lane.tasks.size()) return;
      const Task task = lane.tasks[i];
      const ScenarioWindow& window = windows[task.window];
      const RenderedPrompt& prompt = rendered.at({task.window, task.prompt});

      RunRecord rec;
      rec.run_id = summary.run_id;
      rec.window_id = window.window_id;
      rec.model_id = lane.spec->model_id;
      rec.prompt_hash = prompt.prompt_hash;
      lane.throttle->wait();
      rec.request_time = utc_timestamp_now();
      const auto start = std::chrono::steady_clock::now();
      BackendReply reply;
      try {
        reply = backend->respond(prompt, window);
      } catch (const std::exception& e) {
        reply = BackendReply{RunStatus::transport_error, {}, std::nullopt, 1, e.what()};
      }
      rec.latency_ms = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - start)
                           .count();
      rec.status = reply.status;
      rec.raw_response = std::move(reply.raw_response);
      rec.token_usage = reply.token_usage;
      rec.attempts = reply.attempts;
      rec.error = std::move(reply.error);
      sink.append(rec);
      std::lock_guard lock(lane.mutex);
      ++lane.counts[rec.status];
    }
  };

  std::mutex failure_mutex;
  std::exception_ptr failure;
  auto work = [&](ModelLane& lane) {
    try {
      drain(lane);
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  };

  {
    std::vector<std::jthread> workers;
    for (auto& lane : lanes) {
      std::size_t n = static_cast<std::size_t>(lane->spec->max_parallel);
      if (options.parallel) n = std::min(n, static_cast<std::size_t>(*options.parallel));
      n = std::min(n, lane->tasks.size());
      for (std::size_t i = 0; i < n; ++i) workers.emplace_back(work, std::ref(*lane));
    }
  }
  if (failure) std::rethrow_exception(failure);

  for (const auto& lane : lanes) {
    auto& counts = summary.status_by_model[lane->spec->model_id];
    for (const auto& [status, n] : lane->counts) {
      counts[status] = n;
      summary.records += n;
    }
  }
  return summary;
}

}  // namespace audit
