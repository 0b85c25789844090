#include "audit/workspace.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <set>
#include <sstream>

#include "audit/error.hpp"
#include "audit/text_format.hpp"

namespace audit {

namespace fs = std::filesystem;

namespace {

constexpr std::array<std::string_view, 4> kRunStateNames{"queued", "running", "complete", "failed"};

std::optional<RunState> parse_run_state(std::string_view name) {
  for (std::size_t i = 0; i < kRunStateNames.size(); ++i) {
    if (kRunStateNames[i] == name) return static_cast<RunState>(i);
  }
  return std::nullopt;
}

bool is_valid_run_id(const std::string& id) { return is_valid_collection_id(id); }

void check_run_id(const std::string& id) {
  if (!is_valid_run_id(id)) throw Error(ErrorKind::parameter, "invalid run id '" + id + "'", "run_id");
}

json prompt_json(const PromptSpec& p) {
  return {{"template_id", to_string(p.template_id)},
          {"template_body", p.template_body},
          {"include_images", p.include_images},
          {"prompt_hash", p.prompt_hash()},
          {"prompt_id", p.prompt_id()}};
}

PromptSpec prompt_from_json(const json& v) {
  const bool images = v.at("include_images").get<bool>();
  const auto body = v.at("template_body").get<std::string>();
  PromptSpec p = v.at("template_id").get<std::string>() == "fixed_standard"
                     ? PromptSpec{TemplateId::fixed_standard, body, images}
                     : custom_spec(body, images);
  if (p.prompt_hash() != v.at("prompt_hash").get<std::string>()) {
    throw Error(ErrorKind::integrity, "stored prompt does not match its hash", "prompt.prompt_hash");
  }
  return p;
}

}  // namespace

std::string_view to_string(RunState state) noexcept {
  return kRunStateNames[static_cast<std::size_t>(state)];
}

json to_json(const RunStatusInfo& s) {
  json out = {{"run_id", s.run_id}, {"state", to_string(s.state)}, {"records", s.records}};
  if (!s.error.empty()) out["error"] = s.error;
  return out;
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::not_found, "cannot read " + path.string(), path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json read_json_file(const fs::path& path) {
  const std::string text = read_text_file(path);
  json v = json::parse(text, nullptr, false);
  if (v.is_discarded()) throw Error(ErrorKind::parse, "invalid JSON in " + path.string(), path.string());
  return v;
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << content;
    out.flush();
    if (!out) throw Error(ErrorKind::io, "cannot write " + tmp.string(), path.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::io, "cannot replace " + path.string() + ": " + ec.message());
}

void write_report(const ReportBundle& bundle, const fs::path& out) {
  write_file_atomic(out, bundle.report_json);
  const fs::path dir = out.has_parent_path() ? out.parent_path() : fs::path(".");
  for (const auto& [name, content] : bundle.csv) write_file_atomic(dir / name, content);
}

Workspace::Workspace(fs::path root) : root_(std::move(root)) {}

fs::path Workspace::states_path() const { return root_ / "states.jsonl"; }

fs::path Workspace::collection_path(const std::string& id) const {
  if (!is_valid_collection_id(id)) {
    throw Error(ErrorKind::parameter, "invalid collection id '" + id + "'", "collection_id");
  }
  return root_ / "collections" / (id + ".json");
}

fs::path Workspace::run_dir(const std::string& run_id) const {
  check_run_id(run_id);
  return root_ / "runs" / run_id;
}

bool Workspace::has_store() const { return fs::is_regular_file(states_path()); }

SceneStore Workspace::load_store() const {
  if (!has_store()) {
    throw Error(ErrorKind::not_found, "no store at " + root_.string() + " (run ingest first)",
                "store");
  }
  return ingest_files({states_path()});
}

void Workspace::save_store(const SceneStore& store) const {
  write_file_atomic(states_path(), store.snapshot());
}

SceneStore Workspace::ingest(const std::vector<fs::path>& files) const {
  SceneStore merged = has_store() ? ingest_files(files, load_store()) : ingest_files(files);
  save_store(merged);
  return merged;
}

bool Workspace::has_collection(const std::string& id) const {
  return fs::is_regular_file(collection_path(id));
}

Collection Workspace::load_collection(const std::string& id) const {
  if (!has_collection(id)) {
    throw Error(ErrorKind::not_found, "no collection '" + id + "'", "collection_id");
  }
  return collection_from_json(read_json_file(collection_path(id)));
}

void Workspace::save_collection(const Collection& c) const {
  write_file_atomic(collection_path(c.collection_id), to_json(c).dump(2) + "\n");
}

std::vector<std::string> Workspace::collection_ids() const {
  std::vector<std::string> out;
  const fs::path dir = root_ / "collections";
  if (!fs::is_directory(dir)) return out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".json") out.push_back(entry.path().stem().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string Workspace::create_run(const std::string& collection_id,
                                  const std::vector<ModelSpec>& models, const PromptSpec& prompt,
                                  const std::string& requested_id) const {
  if (models.empty()) throw Error(ErrorKind::parameter, "a run needs at least one model", "models");
  std::set<std::string> ids;
  for (const auto& m : models) {
    validate(m);
    if (!ids.insert(m.model_id).second) {
      throw Error(ErrorKind::configuration, "duplicate model id '" + m.model_id + "'", "model_id");
    }
    check_credentials(m);
  }
  const Collection collection = load_collection(collection_id);

  const std::string run_id = requested_id.empty() ? new_run_id() : requested_id;
  const fs::path dir = run_dir(run_id);
  if (fs::exists(dir)) throw Error(ErrorKind::conflict, "run " + run_id + " already exists", "run_id");
  fs::create_directories(dir);

  json models_json = json::array();
  for (const auto& m : models) models_json.push_back(to_json(m));
  write_file_atomic(dir / "models.json", models_json.dump(2) + "\n");
  write_file_atomic(dir / "run.json", json{{"run_id", run_id},
                                           {"collection_id", collection_id},
                                           {"window_ids", collection.window_ids},
                                           {"prompt", prompt_json(prompt)},
                                           {"created_at", utc_timestamp_now()}}
                                          .dump(2) + "\n");
  set_run_status({run_id, RunState::queued, {}, 0});
  return run_id;
}

RunSummary Workspace::execute_created_run(const std::string& run_id, const SceneStore& store,
                                          RunOptions options) const {
  const fs::path dir = run_dir(run_id);
  try {
    const json manifest = read_json_file(dir / "run.json");
    const auto models = load_run_models(run_id);
    const PromptSpec prompt = prompt_from_json(manifest.at("prompt"));
    const Collection collection =
        load_collection(manifest.at("collection_id").get<std::string>());
    if (collection.window_ids != manifest.at("window_ids").get<std::vector<std::string>>()) {
      throw Error(ErrorKind::integrity, "collection changed since the run was created",
                  "collection_id");
    }
    const auto windows = consume_collection(collection, store);
    set_run_status({run_id, RunState::running, {}, 0});

    if (options.image_root.empty()) options.image_root = root_;
    options.run_id = run_id;
    JsonlSink sink(dir / "records.jsonl");
    const std::vector<PromptSpec> prompts{prompt};
    RunSummary summary = execute_run(windows, models, prompts, sink, options);

    const auto records = load_records(run_id);
    const ParsedRun parsed = parse_run(records);
    write_file_atomic(dir / "assessments.jsonl", to_jsonl(parsed.assessments));
    write_file_atomic(dir / "rejections.jsonl", to_jsonl(parsed.rejections));
    set_run_status({run_id, RunState::complete, {}, summary.records});
    return summary;
  } catch (const std::exception& e) {
    set_run_status({run_id, RunState::failed, e.what(), 0});
    throw;
  }
}

bool Workspace::has_run(const std::string& run_id) const {
  return is_valid_run_id(run_id) && fs::is_regular_file(run_dir(run_id) / "run.json");
}

RunStatusInfo Workspace::run_status(const std::string& run_id) const {
  if (!has_run(run_id)) throw Error(ErrorKind::not_found, "no run '" + run_id + "'", "run_id");
  const json v = read_json_file(run_dir(run_id) / "status.json");
  RunStatusInfo s;
  s.run_id = run_id;
  s.state = parse_run_state(v.value("state", std::string{})).value_or(RunState::failed);
  s.error = v.value("error", std::string{});
  s.records = v.value("records", std::size_t{0});
  return s;
}

void Workspace::set_run_status(const RunStatusInfo& status) const {
  write_file_atomic(run_dir(status.run_id) / "status.json", to_json(status).dump() + "\n");
}

std::vector<RunRecord> Workspace::load_records(const std::string& run_id) const {
  if (!has_run(run_id)) throw Error(ErrorKind::not_found, "no run '" + run_id + "'", "run_id");
  std::vector<RunRecord> out;
  const fs::path path = run_dir(run_id) / "records.jsonl";
  if (!fs::exists(path)) return out;
  std::ifstream in(path);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    json v = json::parse(line, nullptr, false);
    if (v.is_discarded()) {
      throw Error(ErrorKind::parse, "records.jsonl line " + std::to_string(n) + " is not JSON",
                  "records");
    }
    out.push_back(run_record_from_json(v));
  }
  return out;
}

std::vector<ModelSpec> Workspace::load_run_models(const std::string& run_id) const {
  if (!has_run(run_id)) throw Error(ErrorKind::not_found, "no run '" + run_id + "'", "run_id");
  return model_specs_from_json(read_json_file(run_dir(run_id) / "models.json"));
}

ReportBundle Workspace::report(const std::string& run_id, const ReportOptions& options) const {
  const RunStatusInfo status = run_status(run_id);
  if (status.state != RunState::complete) {
    throw Error(ErrorKind::conflict,
                "run " + run_id + " is " + std::string(to_string(status.state)) +
                    "; reports need a complete run",
                "run_id");
  }
  const auto records = load_records(run_id);
  return build_report(records, options);
}

}  // namespace audit
