#include "audit/assessment.hpp"

#include <algorithm>
#include <array>
#include <set>

#include "audit/error.hpp"
#include "audit/risk_codes.hpp"

namespace audit {

namespace {

constexpr std::array<std::string_view, kRejectionReasonCount> kReasonNames{
    "not_json",      "extra_text",        "markdown_wrapper",     "unknown_field",
    "code_out_of_range", "type_mismatch", "consistency_violation"};

constexpr std::array<std::string_view, 5> kSchemaFields{
    "window_has_risk", "overall_risk_level", "risk_types", "evidence_signals", "uncertainty"};

struct Rejected {
  RejectionReason reason;
  std::string detail;
};

bool is_json_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_json_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_json_space(s.back())) s.remove_suffix(1);
  return s;
}

std::string fragment(std::string_view s, std::size_t max = 60) {
  std::string out(s.substr(0, max));
  if (s.size() > max) out += "...";
  return out;
}

/// Extent of the first brace-balanced {...} span, honoring string literals.
std::optional<std::pair<std::size_t, std::size_t>> first_object_span(std::string_view s) {
  const auto open = s.find('{');
  if (open == std::string_view::npos) return std::nullopt;
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = open; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return std::pair{open, i + 1};
    }
  }
  return std::nullopt;
}

struct StrictParse {
  json value;
  bool ok = false;
  std::string duplicate_key;
};

StrictParse strict_parse(std::string_view text) {
  StrictParse out;
  std::vector<std::set<std::string>> open_objects;
  json::parser_callback_t callback = [&](int, json::parse_event_t event, json& parsed) {
    switch (event) {
      case json::parse_event_t::object_start:
        open_objects.emplace_back();
        break;
      case json::parse_event_t::object_end:
        if (!open_objects.empty()) open_objects.pop_back();
        break;
      case json::parse_event_t::key:
        if (!open_objects.empty() && parsed.is_string() &&
            !open_objects.back().insert(parsed.get<std::string>()).second &&
            out.duplicate_key.empty()) {
          out.duplicate_key = parsed.get<std::string>();
        }
        break;
      default:
        break;
    }
    return true;
  };
  out.value = json::parse(text.begin(), text.end(), callback, /*allow_exceptions=*/false);
  out.ok = !out.value.is_discarded();
  return out;
}

std::optional<Rejected> check_code(const json& v, const std::string& path, bool (*in_set)(int),
                                   std::string_view set_text) {
  if (!v.is_number_integer()) {
    return Rejected{RejectionReason::type_mismatch, path + ": expected an integer code, got " +
                                                        fragment(v.dump())};
  }
  const auto raw = v.is_number_unsigned() ? static_cast<long long>(std::min<std::uint64_t>(
                                                v.get<std::uint64_t>(), 1u << 30))
                                          : v.get<long long>();
  if (raw < -(1 << 30) || raw > (1 << 30) || !in_set(static_cast<int>(raw))) {
    return Rejected{RejectionReason::code_out_of_range,
                    path + ": " + v.dump() + " not in " + std::string(set_text)};
  }
  return std::nullopt;
}

bool is_binary(int v) { return v == 0 || v == 1; }
bool is_level(int v) { return risk::is_level(v); }
bool is_risk_type(int v) { return risk::is_risk_type(v); }
bool is_evidence(int v) { return risk::is_evidence_signal(v); }
bool is_uncertainty(int v) { return risk::is_uncertainty(v); }

std::optional<Rejected> check_scalar(const json& obj, std::string_view key, bool (*in_set)(int),
                                     std::string_view set_text, int& out) {
  const std::string path = "$." + std::string(key);
  auto it = obj.find(std::string(key));
  if (it == obj.end()) return Rejected{RejectionReason::type_mismatch, path + ": missing field"};
  if (auto r = check_code(*it, path, in_set, set_text)) return r;
  out = it->get<int>();
  return std::nullopt;
}

std::optional<Rejected> check_list(const json& obj, std::string_view key, bool (*in_set)(int),
                                   std::string_view set_text, std::vector<int>& out) {
  const std::string path = "$." + std::string(key);
  auto it = obj.find(std::string(key));
  if (it == obj.end()) return Rejected{RejectionReason::type_mismatch, path + ": missing field"};
  if (!it->is_array()) {
    return Rejected{RejectionReason::type_mismatch,
                    path + ": expected an array of integer codes, got " + fragment(it->dump())};
  }
  for (std::size_t i = 0; i < it->size(); ++i) {
    if (auto r = check_code((*it)[i], path + "[" + std::to_string(i) + "]", in_set, set_text)) {
      return r;
    }
    out.push_back((*it)[i].get<int>());
  }
  return std::nullopt;
}

std::optional<Rejected> check_unique(const std::vector<int>& codes, std::string_view key) {
  std::set<int> seen;
  for (int c : codes) {
    if (!seen.insert(c).second) {
      return Rejected{RejectionReason::consistency_violation,
                      "$." + std::string(key) + ": duplicate code " + std::to_string(c)};
    }
  }
  return std::nullopt;
}

std::variant<RiskAssessment, Rejected> validate_text(std::string_view raw) {
  const std::string_view text = trim(raw);
  if (text.find("```") != std::string_view::npos) {
    return Rejected{RejectionReason::markdown_wrapper, "$: fenced code block"};
  }
  if (text.empty()) return Rejected{RejectionReason::not_json, "$: empty response"};

  const StrictParse parsed = strict_parse(text);
  if (!parsed.ok) {
    if (auto span = first_object_span(text)) {
      const auto inner = text.substr(span->first, span->second - span->first);
      if (strict_parse(inner).ok) {
        const auto before = trim(text.substr(0, span->first));
        const auto after = trim(text.substr(span->second));
        return Rejected{RejectionReason::extra_text,
                        "$: text outside the JSON object: " +
                            fragment(before.empty() ? after : before)};
      }
    }
    return Rejected{RejectionReason::not_json, "$: " + fragment(text)};
  }
  if (!parsed.duplicate_key.empty()) {
    return Rejected{RejectionReason::consistency_violation,
                    "$." + parsed.duplicate_key + ": key repeated"};
  }
  const json& obj = parsed.value;
  if (!obj.is_object()) {
    return Rejected{RejectionReason::type_mismatch,
                    "$: expected a JSON object, got " + fragment(obj.dump())};
  }
  for (const auto& [key, _] : obj.items()) {
    if (std::find(kSchemaFields.begin(), kSchemaFields.end(), key) == kSchemaFields.end()) {
      return Rejected{RejectionReason::unknown_field, "$." + key + ": not a schema field"};
    }
  }

  RiskAssessment a;
  if (auto r = check_scalar(obj, "window_has_risk", &is_binary, "{0,1}", a.window_has_risk)) {
    return *r;
  }
  if (auto r = check_scalar(obj, "overall_risk_level", &is_level, "0..6", a.overall_risk_level)) {
    return *r;
  }
  if (auto r = check_list(obj, "risk_types", &is_risk_type, "2..10", a.risk_types)) return *r;
  if (auto r = check_list(obj, "evidence_signals", &is_evidence, "1..8", a.evidence_signals)) {
    return *r;
  }
  if (auto r = check_scalar(obj, "uncertainty", &is_uncertainty, "0..3", a.uncertainty)) {
    return *r;
  }

  if (auto r = check_unique(a.risk_types, "risk_types")) return *r;
  if (auto r = check_unique(a.evidence_signals, "evidence_signals")) return *r;
  if (a.window_has_risk != risk::window_has_risk_for(a.overall_risk_level)) {
    return Rejected{RejectionReason::consistency_violation,
                    "$.window_has_risk: " + std::to_string(a.window_has_risk) +
                        " inconsistent with overall_risk_level " +
                        std::to_string(a.overall_risk_level)};
  }
  if (a.overall_risk_level >= 2 && a.risk_types.empty()) {
    return Rejected{RejectionReason::consistency_violation,
                    "$.risk_types: empty while overall_risk_level is " +
                        std::to_string(a.overall_risk_level)};
  }
  return a;
}

}  // namespace

std::string_view to_string(RejectionReason reason) noexcept {
  return kReasonNames[static_cast<std::size_t>(reason)];
}

std::optional<RejectionReason> parse_rejection_reason(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kReasonNames.size(); ++i) {
    if (kReasonNames[i] == name) return static_cast<RejectionReason>(i);
  }
  return std::nullopt;
}

ParseOutcome parse_assessment(std::string_view raw, const std::string& window_id,
                              const std::string& model_id, const std::string& prompt_hash) {
  auto result = validate_text(raw);
  if (auto* rejected = std::get_if<Rejected>(&result)) {
    return ParseRejection{window_id, model_id, prompt_hash, rejected->reason,
                          std::move(rejected->detail)};
  }
  auto a = std::get<RiskAssessment>(std::move(result));
  a.window_id = window_id;
  a.model_id = model_id;
  a.prompt_hash = prompt_hash;
  return a;
}

ParseOutcome parse_assessment(const RunRecord& record) {
  return parse_assessment(record.raw_response, record.window_id, record.model_id,
                          record.prompt_hash);
}

std::string to_payload(const RiskAssessment& a) {
  nlohmann::ordered_json out;
  out["window_has_risk"] = a.window_has_risk;
  out["overall_risk_level"] = a.overall_risk_level;
  out["risk_types"] = a.risk_types;
  out["evidence_signals"] = a.evidence_signals;
  out["uncertainty"] = a.uncertainty;
  return out.dump();
}

json to_json(const RiskAssessment& a) {
  return {{"window_id", a.window_id},
          {"model_id", a.model_id},
          {"prompt_hash", a.prompt_hash},
          {"window_has_risk", a.window_has_risk},
          {"overall_risk_level", a.overall_risk_level},
          {"risk_types", a.risk_types},
          {"evidence_signals", a.evidence_signals},
          {"uncertainty", a.uncertainty}};
}

RiskAssessment risk_assessment_from_json(const json& v) {
  try {
    RiskAssessment a;
    a.window_id = v.at("window_id").get<std::string>();
    a.model_id = v.at("model_id").get<std::string>();
    a.prompt_hash = v.value("prompt_hash", std::string{});
    a.window_has_risk = v.at("window_has_risk").get<int>();
    a.overall_risk_level = v.at("overall_risk_level").get<int>();
    a.risk_types = v.at("risk_types").get<std::vector<int>>();
    a.evidence_signals = v.at("evidence_signals").get<std::vector<int>>();
    a.uncertainty = v.at("uncertainty").get<int>();
    return a;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, std::string("malformed assessment: ") + e.what());
  }
}

json to_json(const ParseRejection& r) {
  return {{"window_id", r.window_id},
          {"model_id", r.model_id},
          {"prompt_hash", r.prompt_hash},
          {"reason", to_string(r.reason)},
          {"detail", r.detail}};
}

ParseRejection parse_rejection_from_json(const json& v) {
  try {
    ParseRejection r;
    r.window_id = v.at("window_id").get<std::string>();
    r.model_id = v.at("model_id").get<std::string>();
    r.prompt_hash = v.value("prompt_hash", std::string{});
    auto reason = parse_rejection_reason(v.at("reason").get<std::string>());
    if (!reason) throw Error(ErrorKind::parse, "unknown rejection reason", "reason");
    r.reason = *reason;
    r.detail = v.value("detail", std::string{});
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, std::string("malformed rejection: ") + e.what());
  }
}

std::size_t StrictnessCounts::rejected_total() const {
  std::size_t n = 0;
  for (const auto& [_, c] : rejected) n += c;
  return n;
}

std::map<std::string, StrictnessCounts> strictness_report(std::span<const RunRecord> records) {
  std::map<std::string, StrictnessCounts> out;
  for (const auto& r : records) {
    auto& counts = out[r.model_id];
    if (r.status != RunStatus::ok) {
      ++counts.not_ok;
      continue;
    }
    ++counts.ok_records;
    const auto outcome = parse_assessment(r);
    if (std::holds_alternative<RiskAssessment>(outcome)) {
      ++counts.accepted;
    } else {
      ++counts.rejected[std::get<ParseRejection>(outcome).reason];
    }
  }
  return out;
}

json to_json(const std::map<std::string, StrictnessCounts>& report) {
  json out = json::object();
  for (const auto& [model, c] : report) {
    json reasons = json::object();
    for (std::size_t i = 0; i < kRejectionReasonCount; ++i) {
      const auto reason = static_cast<RejectionReason>(i);
      auto it = c.rejected.find(reason);
      reasons[std::string(to_string(reason))] = it == c.rejected.end() ? 0 : it->second;
    }
    out[model] = {{"ok_records", c.ok_records},
                  {"accepted", c.accepted},
                  {"rejected", c.rejected_total()},
                  {"rejected_by_reason", std::move(reasons)},
                  {"not_ok", c.not_ok}};
  }
  return out;
}

}  // namespace audit
