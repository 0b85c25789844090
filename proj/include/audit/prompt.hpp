#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "audit/window.hpp"

namespace audit {

/// Global constraint prefix. Every rendered prompt starts with these bytes.
inline constexpr std::string_view kConstraintPrefix =
    "You are an expert in urban traffic risk assessment.\n"
    "\n"
    "Using ONLY the information explicitly provided in the input (structured CAN per second, "
    "YOLO detections including dist_m and lane_rel, basic context, and IF PRESENT any "
    "provided images).\n"
    "\n"
    "IMPORTANT:\n"
    "- Output MUST be valid JSON only. No markdown. No extra text.\n"
    "- Use ONLY the numeric codes provided (do not output strings).\n"
    "- Do NOT invent missing data.\n"
    "\n";

enum class TemplateId { fixed_standard, custom };

std::string_view to_string(TemplateId id) noexcept;

/// Placeholders a template body may use, written as {{name}}.
inline constexpr std::array<std::string_view, 6> kTemplatePlaceholders{
    "schema_version", "risk_code_tables", "window_summary",
    "window_blocks",  "image_note",       "output_format"};

struct PromptSpec {
  TemplateId template_id = TemplateId::fixed_standard;
  std::string template_body;
  bool include_images = true;

  /// Digest over prefix, template body and schema version.
  std::string prompt_hash() const;
  /// "fixed_standard" or "custom-<first 12 hex of prompt_hash>".
  std::string prompt_id() const;
};

PromptSpec fixed_standard_spec(bool include_images = true);

/// Throws template_error when the body references an unknown placeholder or
/// leaves a "{{" unterminated.
PromptSpec custom_spec(std::string template_body, bool include_images = true);

/// "fixed_standard" resolves to the built-in template; anything else is read
/// as a path to a custom template file.
PromptSpec resolve_prompt_spec(const std::string& name_or_path, bool include_images = true);

struct RenderedPrompt {
  std::string text;
  std::vector<std::string> attachments;
  std::string window_id;
  std::string prompt_hash;
};

RenderedPrompt render_prompt(const ScenarioWindow& window, const PromptSpec& spec);

/// Fixed key order t, ego, objects (by track_id), road, env. Speeds,
/// distances, steering and acceleration carry one decimal; brake and
/// confidence two. Locale-independent.
std::string serialize_window_block(const SceneState& state);

std::string risk_code_tables();
std::string output_format_instruction();

}  // namespace audit
