#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "audit/analysis.hpp"

namespace audit {

struct DisagreementWeights {
  double severity = 0.25;
  double escalation = 0.25;
  double evidence = 0.25;
  double factor = 0.25;

  bool operator==(const DisagreementWeights&) const = default;
};

void validate(const DisagreementWeights& weights);

struct ScenarioDisagreement {
  std::string window_id;
  double d_sev = 0.0;
  double d_esc = 0.0;
  double d_evi = 0.0;
  double d_fac = 0.0;
  double composite = 0.0;
  bool ambiguous = false;
  std::map<std::string, double> per_model_contribution;

  bool operator==(const ScenarioDisagreement&) const = default;
};

/// Key for a model's dominant factor; an empty risk_types list is its own
/// category, encoded as 0.
int dominant_key(const RiskAssessment& assessment);

/// True iff the cohort differs on level, escalation, distinct-evidence count
/// or dominant factor. Needs at least two assessments of one window.
bool detect_ambiguity(std::span<const RiskAssessment> cohort, int tau);

/// Range-based severity and evidence spreads, binary escalation split and
/// renormalized modal mismatch of the dominant factor, combined by weight.
/// Consensus for contributions: median level and count, majority escalation
/// class (ties count as escalated) and modal factor (ties go to the smaller
/// key).
ScenarioDisagreement composite_uncertainty(std::span<const RiskAssessment> cohort, int tau,
                                           const DisagreementWeights& weights = {});

struct TierPartition {
  std::vector<std::string> low;
  std::vector<std::string> medium;
  std::vector<std::string> high;

  bool operator==(const TierPartition&) const = default;
};

/// Sorts ascending by (composite, window_id) so both tiering and heatmap
/// rows share one order.
std::vector<ScenarioDisagreement> sort_by_uncertainty(std::vector<ScenarioDisagreement> scores);

/// Sizes floor(N/3), N - 2 floor(N/3), floor(N/3).
TierPartition tier_partition(std::span<const ScenarioDisagreement> scores);

struct HeatmapMatrix {
  std::vector<std::string> models;       // columns, ascending id
  std::vector<std::string> window_ids;   // rows, lowest composite first
  std::vector<std::vector<double>> cells;

  bool operator==(const HeatmapMatrix&) const = default;
};

HeatmapMatrix heatmap_matrix(std::span<const ScenarioDisagreement> scores);

/// Scores every window assessed by all models. Windows missing from any
/// model are skipped; callers report them separately.
std::vector<ScenarioDisagreement> score_windows(const AssessmentsByModel& assessments, int tau,
                                                const DisagreementWeights& weights = {});

}  // namespace audit
