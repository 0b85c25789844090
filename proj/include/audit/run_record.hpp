#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "audit/scene.hpp"

namespace audit {

enum class RunStatus { ok, transport_error, timeout, refused };

std::string_view to_string(RunStatus status) noexcept;
std::optional<RunStatus> parse_run_status(std::string_view name) noexcept;

struct TokenUsage {
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;

  bool operator==(const TokenUsage&) const = default;
};

/// One (window, model, prompt) attempt of a run. raw_response is verbatim
/// whenever status is ok.
struct RunRecord {
  std::string run_id;
  std::string window_id;
  std::string model_id;
  std::string prompt_hash;
  std::string request_time;
  double latency_ms = 0.0;
  std::string raw_response;
  std::optional<TokenUsage> token_usage;
  RunStatus status = RunStatus::ok;
  int attempts = 0;
  std::string error;  // transport detail when status != ok

  bool operator==(const RunRecord&) const = default;
};

json to_json(const RunRecord& record);
RunRecord run_record_from_json(const json& value);

}  // namespace audit
