#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "audit/assessment.hpp"

namespace audit {

struct AnalysisConfig {
  int tau = 4;                       // escalation threshold on overall_risk_level
  double entropy_threshold = 0.5;    // normalized entropy below this is "specialized"

  bool operator==(const AnalysisConfig&) const = default;
};

void validate(const AnalysisConfig& config);

struct BehaviorLabels {
  std::string risk_posture;            // conservative | tolerant
  std::string escalation_sensitivity;  // elevated | normal
  std::string reasoning_breadth;       // narrow | broad
  std::string attribution;             // specialized | diversified

  bool operator==(const BehaviorLabels&) const = default;
};

struct ModelProfile {
  std::string model_id;
  std::size_t windows = 0;
  double mu_risk = 0.0;
  double rho_high = 0.0;
  double mu_evidence = 0.0;
  std::map<int, std::size_t> factor_dist;  // dominant risk type -> window count
  double attribution_entropy = 0.0;
  double vru_rate = 0.0;
  double mean_uncertainty = 0.0;
  std::optional<double> mean_tokens;
  std::optional<BehaviorLabels> labels;

  bool operator==(const ModelProfile&) const = default;
};

using AssessmentsByModel = std::map<std::string, std::vector<RiskAssessment>>;
/// model -> window -> completion tokens
using CompletionTokens = std::map<std::string, std::map<std::string, std::int64_t>>;

/// Entropy of the distribution divided by log(9), the number of risk types.
/// An empty distribution has entropy 0.
double normalized_entropy(const std::map<int, std::size_t>& distribution);

/// Every model must cover the same window set with one assessment per
/// window; otherwise a coverage error lists the missing (model, window)
/// pairs. mean_tokens is set only when every covered window has a count.
std::vector<ModelProfile> compute_profiles(const AssessmentsByModel& assessments,
                                           const AnalysisConfig& config,
                                           const CompletionTokens& tokens = {});

/// Median-relative labels within the cohort; needs at least two models.
void assign_labels(std::vector<ModelProfile>& profiles, const AnalysisConfig& config);

/// Median of a non-empty sample; even counts average the middle pair.
double median(std::vector<double> values);

struct RadarVector {
  std::string model_id;
  double attribution_diversity = 0.0;
  double high_risk_escalation = 0.0;
  double vru_presence = 0.0;
  double evidence_breadth = 0.0;
  double uncertainty_expression = 0.0;
  std::optional<double> relative_tokens;  // omitted when any model lacks usage

  bool operator==(const RadarVector&) const = default;
};

std::vector<RadarVector> radar_summary(std::span<const ModelProfile> profiles);

}  // namespace audit
