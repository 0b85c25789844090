#pragma once

#include <optional>
#include <string>
#include <vector>

#include "audit/model_spec.hpp"
#include "audit/prompt.hpp"
#include "audit/run_record.hpp"

namespace audit {

/// Window statistics a persona reacts to.
struct WindowCues {
  std::optional<double> min_person_dist_m;
  double max_ego_speed_mps = 0.0;
  std::vector<int> applicable_risk_types;  // ascending codes
};

/// Above this ego speed the speed risk type (7) applies when the persona has
/// no speed boost of its own.
inline constexpr double kDefaultSpeedRiskMps = 13.9;

WindowCues window_cues(const ScenarioWindow& window, const PersonaRules& rules);

/// Deterministic schema-conformant payload for a window.
std::string mock_persona_respond(const RenderedPrompt& prompt, const ScenarioWindow& window,
                                 const PersonaRules& rules);

/// Rough 4-bytes-per-token estimate used for mock usage accounting.
TokenUsage estimate_token_usage(const std::string& prompt_text, const std::string& completion);

}  // namespace audit
