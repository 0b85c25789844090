#include "audit/run_record.hpp"

#include <array>

#include "audit/error.hpp"
#include "audit/risk_codes.hpp"

namespace audit {

namespace {
constexpr std::array<std::string_view, 4> kStatusNames{"ok", "transport_error", "timeout",
                                                       "refused"};
}

std::string_view to_string(RunStatus status) noexcept {
  return kStatusNames[static_cast<std::size_t>(status)];
}

std::optional<RunStatus> parse_run_status(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kStatusNames.size(); ++i) {
    if (kStatusNames[i] == name) return static_cast<RunStatus>(i);
  }
  return std::nullopt;
}

json to_json(const RunRecord& r) {
  json out = {{"run_id", r.run_id},
              {"window_id", r.window_id},
              {"model_id", r.model_id},
              {"prompt_hash", r.prompt_hash},
              {"schema_version", risk::kSchemaVersion},
              {"request_time", r.request_time},
              {"latency_ms", r.latency_ms},
              {"raw_response", r.raw_response},
              {"status", to_string(r.status)},
              {"attempts", r.attempts}};
  if (r.token_usage) {
    out["token_usage"] = {{"prompt_tokens", r.token_usage->prompt_tokens},
                          {"completion_tokens", r.token_usage->completion_tokens}};
  } else {
    out["token_usage"] = nullptr;
  }
  if (!r.error.empty()) out["error"] = r.error;
  return out;
}

RunRecord run_record_from_json(const json& v) {
  RunRecord r;
  try {
    r.run_id = v.at("run_id").get<std::string>();
    r.window_id = v.at("window_id").get<std::string>();
    r.model_id = v.at("model_id").get<std::string>();
    r.prompt_hash = v.at("prompt_hash").get<std::string>();
    r.request_time = v.at("request_time").get<std::string>();
    r.latency_ms = v.at("latency_ms").get<double>();
    r.raw_response = v.at("raw_response").get<std::string>();
    auto status = parse_run_status(v.at("status").get<std::string>());
    if (!status) throw Error(ErrorKind::parse, "unknown run status", "status");
    r.status = *status;
    r.attempts = v.value("attempts", 0);
    if (auto it = v.find("token_usage"); it != v.end() && !it->is_null()) {
      r.token_usage = TokenUsage{it->at("prompt_tokens").get<std::int64_t>(),
                                 it->at("completion_tokens").get<std::int64_t>()};
    }
    r.error = v.value("error", std::string{});
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, std::string("malformed run record: ") + e.what());
  }
  return r;
}

}  // namespace audit
