#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "audit/run_record.hpp"

namespace audit {

/// A schema-valid model answer for one window.
struct RiskAssessment {
  std::string window_id;
  std::string model_id;
  std::string prompt_hash;
  int window_has_risk = 0;
  int overall_risk_level = 0;
  std::vector<int> risk_types;        // dominant factor first
  std::vector<int> evidence_signals;  // priority order
  int uncertainty = 0;

  std::optional<int> dominant_factor() const {
    if (risk_types.empty()) return std::nullopt;
    return risk_types.front();
  }
  bool operator==(const RiskAssessment&) const = default;
};

enum class RejectionReason {
  not_json,
  extra_text,
  markdown_wrapper,
  unknown_field,
  code_out_of_range,
  type_mismatch,
  consistency_violation,
};

inline constexpr std::size_t kRejectionReasonCount = 7;

std::string_view to_string(RejectionReason reason) noexcept;
std::optional<RejectionReason> parse_rejection_reason(std::string_view name) noexcept;

struct ParseRejection {
  std::string window_id;
  std::string model_id;
  std::string prompt_hash;
  RejectionReason reason = RejectionReason::not_json;
  std::string detail;  // "<field path>: <offending fragment or explanation>"

  bool operator==(const ParseRejection&) const = default;
};

using ParseOutcome = std::variant<RiskAssessment, ParseRejection>;

/// Strict validation of a raw response. Accepts exactly one top-level JSON
/// object (surrounding whitespace allowed) holding exactly the five schema
/// fields with integer codes from the closed sets. Nothing is repaired.
///
/// The first failing check decides the reason: markdown fence, then JSON
/// syntax (with text around a parsable object reported as extra_text), then
/// unknown keys, then each field in schema order (type before range), then
/// repeated codes and cross-field consistency. Repeated JSON keys and
/// repeated codes are consistency_violation.
ParseOutcome parse_assessment(std::string_view raw, const std::string& window_id = {},
                              const std::string& model_id = {},
                              const std::string& prompt_hash = {});

/// Precondition: record.status == ok.
ParseOutcome parse_assessment(const RunRecord& record);

/// The canonical payload a conforming model would emit (schema key order).
std::string to_payload(const RiskAssessment& assessment);

json to_json(const RiskAssessment& assessment);
RiskAssessment risk_assessment_from_json(const json& value);
json to_json(const ParseRejection& rejection);
ParseRejection parse_rejection_from_json(const json& value);

struct StrictnessCounts {
  std::size_t ok_records = 0;
  std::size_t accepted = 0;
  std::map<RejectionReason, std::size_t> rejected;
  std::size_t not_ok = 0;  // records that never produced a response

  std::size_t rejected_total() const;
  bool operator==(const StrictnessCounts&) const = default;
};

/// Per-model acceptance counts over ok records; independent of record order.
std::map<std::string, StrictnessCounts> strictness_report(std::span<const RunRecord> records);
json to_json(const std::map<std::string, StrictnessCounts>& report);

}  // namespace audit
