#include "audit/prompt.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "audit/digest.hpp"
#include "audit/error.hpp"
#include "audit/prompt_templates.hpp"
#include "audit/risk_codes.hpp"
#include "audit/text_format.hpp"

namespace audit {

namespace {

struct Segment {
  bool placeholder;
  std::string text;
};

std::vector<Segment> split_template(std::string_view body) {
  std::vector<Segment> out;
  std::size_t pos = 0;
  while (pos < body.size()) {
    const auto open = body.find("{{", pos);
    if (open == std::string_view::npos) {
      out.push_back({false, std::string(body.substr(pos))});
      break;
    }
    if (open > pos) out.push_back({false, std::string(body.substr(pos, open - pos))});
    const auto close = body.find("}}", open + 2);
    if (close == std::string_view::npos) {
      throw Error(ErrorKind::template_error, "unterminated placeholder", "template_body");
    }
    std::string name(body.substr(open + 2, close - open - 2));
    if (std::find(kTemplatePlaceholders.begin(), kTemplatePlaceholders.end(), name) ==
        kTemplatePlaceholders.end()) {
      throw Error(ErrorKind::template_error, "unknown placeholder {{" + name + "}}",
                  "template_body");
    }
    out.push_back({true, std::move(name)});
    pos = close + 2;
  }
  return out;
}

template <std::size_t N>
void append_table(std::string& out, std::string_view title, std::string_view field,
                  const std::array<risk::Code, N>& codes) {
  out += title;
  out += " (";
  out += field;
  out += "):\n";
  for (const auto& c : codes) {
    out += "  ";
    out += std::to_string(c.value);
    out += " = ";
    out += c.label;
    out += '\n';
  }
}

std::string window_summary(const ScenarioWindow& w) {
  std::string out;
  out += "acquisition: " + w.anchor.acquisition_id + "\n";
  out += "anchor_t0: " + std::to_string(w.anchor.t0) + "\n";
  out += "span: [" + std::to_string(w.t_from()) + ", " + std::to_string(w.t_to()) + "] (" +
         std::to_string(w.k) + " s before, " + std::to_string(w.m) + " s after the anchor)\n";
  out += "seconds_present: " + std::to_string(w.states.size()) + " of " +
         std::to_string(w.expected_seconds) + "\n";
  return out;
}

std::string image_note(std::size_t attachments) {
  if (attachments == 0) {
    return "No images provided. Evidence signal 8 (Image input) is not available.\n";
  }
  return std::to_string(attachments) +
         " frame image(s) attached in ascending t order. Evidence signal 8 (Image input) is "
         "available.\n";
}

}  // namespace

std::string_view to_string(TemplateId id) noexcept {
  return id == TemplateId::fixed_standard ? "fixed_standard" : "custom";
}

std::string PromptSpec::prompt_hash() const {
  std::string material(kConstraintPrefix);
  material += '\n';
  material += template_body;
  material += '\n';
  material += risk::kSchemaVersion;
  return sha256_hex(material);
}

std::string PromptSpec::prompt_id() const {
  if (template_id == TemplateId::fixed_standard) return "fixed_standard";
  return "custom-" + prompt_hash().substr(0, 12);
}

PromptSpec fixed_standard_spec(bool include_images) {
  return {TemplateId::fixed_standard, std::string(templates::kFixedStandard), include_images};
}

PromptSpec custom_spec(std::string template_body, bool include_images) {
  split_template(template_body);
  return {TemplateId::custom, std::move(template_body), include_images};
}

PromptSpec resolve_prompt_spec(const std::string& name_or_path, bool include_images) {
  if (name_or_path == "fixed_standard") return fixed_standard_spec(include_images);
  std::ifstream in(name_or_path);
  if (!in) {
    throw Error(ErrorKind::not_found, "unknown prompt spec '" + name_or_path + "'", "prompt");
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return custom_spec(buf.str(), include_images);
}

std::string serialize_window_block(const SceneState& s) {
  std::string out;
  out += "[t=" + std::to_string(s.t) + "]\n";
  out += "ego: speed_mps=" + format_fixed(s.ego.speed_mps, 1) +
         " steering_deg=" + format_fixed(s.ego.steering_deg, 1) +
         " brake=" + format_fixed(s.ego.brake, 2) +
         " accel_mps2=" + format_fixed(s.ego.accel_mps2, 1) + "\n";
  if (s.objects.empty()) {
    out += "objects: none\n";
  } else {
    out += "objects:\n";
    std::vector<const TrackedObject*> sorted;
    for (const auto& o : s.objects) sorted.push_back(&o);
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const auto* a, const auto* b) { return a->track_id < b->track_id; });
    for (const auto* p : sorted) {
      const TrackedObject& o = *p;
      out += "  - track_id=" + std::to_string(o.track_id) + " class=" +
             std::string(to_string(o.object_class)) + " dist_m=" + format_fixed(o.dist_m, 1) +
             " lane_rel=" + std::to_string(o.lane_rel) + " conf=" + format_fixed(o.confidence, 2) +
             "\n";
    }
  }
  out += "road: type=" + std::string(to_string(s.road.type)) +
         " lanes=" + std::to_string(s.road.lane_count) +
         " sidewalk=" + (s.road.sidewalk_present ? "yes" : "no") + "\n";
  out += "env: weather=" + std::string(to_string(s.environment.weather)) +
         " illumination=" + std::string(to_string(s.environment.illumination)) + "\n";
  return out;
}

std::string risk_code_tables() {
  std::string out;
  append_table(out, "Overall Risk Severity", "overall_risk_level", risk::kOverallRiskLevels);
  append_table(out, "Risk Occurrence Indicator", "window_has_risk", risk::kWindowHasRisk);
  append_table(out, "Evidence Attribution Signals", "evidence_signals", risk::kEvidenceSignals);
  append_table(out, "Risk Category Types", "risk_types", risk::kRiskTypes);
  append_table(out, "Uncertainty", "uncertainty", risk::kUncertainty);
  out += "lane_rel: 0 = ego lane, -1/-2 = lanes to the left, 1/2 = lanes to the right, "
         "9 = off-road or sidewalk\n";
  return out;
}

std::string output_format_instruction() {
  return "Return exactly one JSON object with exactly these keys, in this order:\n"
         "{\"window_has_risk\":0|1,\"overall_risk_level\":0-6,\"risk_types\":[...dominant "
         "first...],\"evidence_signals\":[...priority order...],\"uncertainty\":0-3}\n"
         "- window_has_risk is 1 if and only if overall_risk_level is 1 or higher.\n"
         "- risk_types: codes 2-10 without duplicates, dominant factor first; may be empty only "
         "when overall_risk_level is 0 or 1.\n"
         "- evidence_signals: codes 1-8 without duplicates, highest priority first.\n"
         "- uncertainty: 0 none, 1 low, 2 medium, 3 high.\n";
}

RenderedPrompt render_prompt(const ScenarioWindow& window, const PromptSpec& spec) {
  const auto segments = split_template(spec.template_body);

  RenderedPrompt out;
  out.window_id = window.window_id;
  out.prompt_hash = spec.prompt_hash();
  if (spec.include_images) out.attachments = window.image_refs;

  std::string blocks;
  for (const auto& s : window.states) blocks += serialize_window_block(s);

  const std::map<std::string_view, std::string> values{
      {"schema_version", std::string(risk::kSchemaVersion)},
      {"risk_code_tables", risk_code_tables()},
      {"window_summary", window_summary(window)},
      {"window_blocks", blocks},
      {"image_note", image_note(out.attachments.size())},
      {"output_format", output_format_instruction()},
  };

  out.text = std::string(kConstraintPrefix);
  for (const auto& seg : segments) out.text += seg.placeholder ? values.at(seg.text) : seg.text;
  return out;
}

}  // namespace audit
