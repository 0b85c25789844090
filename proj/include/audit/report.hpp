#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "audit/ambiguity.hpp"
#include "audit/analysis.hpp"
#include "audit/assessment.hpp"

namespace audit {

inline constexpr std::string_view kReportSchemaVersion = "audit-report/1";

struct ReportOptions {
  AnalysisConfig analysis;
  DisagreementWeights weights;
  std::optional<std::string> prompt_hash;  // required when a run used several prompts
};

/// Parse outcome of every ok record, sorted by (prompt_hash, window_id, model_id).
struct ParsedRun {
  std::vector<RiskAssessment> assessments;
  std::vector<ParseRejection> rejections;
};

/// Throws integrity when a (window, model, prompt) triple appears twice.
ParsedRun parse_run(std::span<const RunRecord> records);

std::string to_jsonl(const std::vector<RiskAssessment>& assessments);
std::string to_jsonl(const std::vector<ParseRejection>& rejections);

/// Every artifact of a report, as the exact bytes written to disk.
struct ReportBundle {
  std::string report_json;
  std::map<std::string, std::string> csv;  // file name -> content
};

/// Profiles, labels, radar vectors, disagreement scores and plot tables for
/// one prompt of a run. Models without any accepted assessment and windows
/// not accepted for every remaining model go to the coverage annex. The
/// output depends only on the record set: no run id, no timestamps.
ReportBundle build_report(std::span<const RunRecord> records, const ReportOptions& options = {});

}  // namespace audit
