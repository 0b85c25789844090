#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "audit/model_spec.hpp"
#include "audit/prompt.hpp"
#include "audit/run_record.hpp"

namespace audit {

/// Outcome of one backend call, possibly spanning several attempts.
struct BackendReply {
  RunStatus status = RunStatus::ok;
  std::string raw_response;
  std::optional<TokenUsage> token_usage;
  int attempts = 1;
  std::string error;
};

/// Throws configuration when the spec names a credential variable that is
/// not set. Called for every remote model before a run dispatches.
void check_credentials(const ModelSpec& spec);

/// Chat-completion request body: single user turn, temperature 0. For
/// remote_multimodal the attachments (resolved under image_root) are sent
/// as base64 data URLs after the text part.
json build_chat_request(const RenderedPrompt& prompt, const ModelSpec& spec,
                        const std::filesystem::path& image_root = {});

/// Retries transport failures, 408, 429 and 5xx with capped exponential
/// backoff. A read that runs past timeout_s ends the call with status
/// timeout. Other 4xx answers are not retried.
BackendReply remote_chat_call(const RenderedPrompt& prompt, const ModelSpec& spec,
                              const std::filesystem::path& image_root = {});

}  // namespace audit
