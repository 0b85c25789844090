#include "audit/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "audit/error.hpp"
#include "audit/risk_codes.hpp"

namespace audit {

namespace {

constexpr double kRiskTypeCount = risk::kMaxRiskType - risk::kMinRiskType + 1;

bool has_vru(const RiskAssessment& a) {
  return std::any_of(a.risk_types.begin(), a.risk_types.end(), [](int c) {
    return c == risk::kPedestrian || c == risk::kCyclist;
  });
}

}  // namespace

void validate(const AnalysisConfig& config) {
  if (config.tau < 1 || config.tau > 6) {
    throw Error(ErrorKind::parameter, "tau must lie in 1..6", "tau");
  }
  if (!(config.entropy_threshold >= 0.0 && config.entropy_threshold <= 1.0)) {
    throw Error(ErrorKind::parameter, "entropy threshold must lie in [0,1]", "entropy_threshold");
  }
}

double normalized_entropy(const std::map<int, std::size_t>& distribution) {
  std::size_t total = 0;
  for (const auto& [_, n] : distribution) total += n;
  if (total == 0) return 0.0;
  double h = 0.0;
  for (const auto& [_, n] : distribution) {
    if (n == 0) continue;
    const double p = static_cast<double>(n) / static_cast<double>(total);
    h -= p * std::log(p);
  }
  return std::clamp(h / std::log(kRiskTypeCount), 0.0, 1.0);
}

double median(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorKind::parameter, "median of an empty sample");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

std::vector<ModelProfile> compute_profiles(const AssessmentsByModel& assessments,
                                           const AnalysisConfig& config,
                                           const CompletionTokens& tokens) {
  validate(config);
  if (assessments.empty()) {
    throw Error(ErrorKind::insufficient_cohort, "no models to profile", "models");
  }

  std::map<std::string, std::set<std::string>> covered;
  std::set<std::string> all_windows;
  for (const auto& [model, list] : assessments) {
    auto& ids = covered[model];
    for (const auto& a : list) {
      if (!ids.insert(a.window_id).second) {
        throw Error(ErrorKind::coverage,
                    "model " + model + " has more than one assessment for window " + a.window_id,
                    model);
      }
      all_windows.insert(a.window_id);
    }
  }
  std::vector<std::string> missing;
  for (const auto& [model, ids] : covered) {
    for (const auto& w : all_windows) {
      if (!ids.contains(w)) missing.push_back("(" + model + ", " + w + ")");
    }
  }
  if (all_windows.empty()) {
    throw Error(ErrorKind::coverage, "no accepted assessments to profile", "assessments");
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw Error(ErrorKind::coverage, "unequal window coverage; missing " + list, "assessments");
  }

  std::vector<ModelProfile> out;
  for (const auto& [model, list] : assessments) {
    ModelProfile p;
    p.model_id = model;
    p.windows = list.size();
    std::int64_t level_sum = 0, evidence_sum = 0, uncertainty_sum = 0;
    std::size_t high = 0, vru = 0;
    for (const auto& a : list) {
      level_sum += a.overall_risk_level;
      if (a.overall_risk_level >= config.tau) ++high;
      evidence_sum += static_cast<std::int64_t>(
          std::set<int>(a.evidence_signals.begin(), a.evidence_signals.end()).size());
      uncertainty_sum += a.uncertainty;
      if (auto f = a.dominant_factor()) ++p.factor_dist[*f];
      if (has_vru(a)) ++vru;
    }
    const double n = static_cast<double>(list.size());
    p.mu_risk = static_cast<double>(level_sum) / n;
    p.rho_high = static_cast<double>(high) / n;
    p.mu_evidence = static_cast<double>(evidence_sum) / n;
    p.mean_uncertainty = static_cast<double>(uncertainty_sum) / n;
    p.vru_rate = static_cast<double>(vru) / n;
    p.attribution_entropy = normalized_entropy(p.factor_dist);

    if (auto it = tokens.find(model); it != tokens.end()) {
      std::int64_t sum = 0;
      bool complete = true;
      for (const auto& a : list) {
        auto t = it->second.find(a.window_id);
        if (t == it->second.end()) {
          complete = false;
          break;
        }
        sum += t->second;
      }
      if (complete) p.mean_tokens = static_cast<double>(sum) / n;
    }
    out.push_back(std::move(p));
  }
  return out;
}

void assign_labels(std::vector<ModelProfile>& profiles, const AnalysisConfig& config) {
  validate(config);
  if (profiles.size() < 2) {
    throw Error(ErrorKind::insufficient_cohort, "labels need a cohort of at least two models",
                "models");
  }
  std::vector<double> risk, high, evidence;
  for (const auto& p : profiles) {
    risk.push_back(p.mu_risk);
    high.push_back(p.rho_high);
    evidence.push_back(p.mu_evidence);
  }
  const double risk_median = median(risk);
  const double high_median = median(high);
  const double evidence_median = median(evidence);
  for (auto& p : profiles) {
    p.labels = BehaviorLabels{
        p.mu_risk > risk_median ? "conservative" : "tolerant",
        p.rho_high > high_median ? "elevated" : "normal",
        p.mu_evidence < evidence_median ? "narrow" : "broad",
        p.attribution_entropy < config.entropy_threshold ? "specialized" : "diversified",
    };
  }
}

std::vector<RadarVector> radar_summary(std::span<const ModelProfile> profiles) {
  const bool tokens_known =
      !profiles.empty() && std::all_of(profiles.begin(), profiles.end(),
                                       [](const ModelProfile& p) { return p.mean_tokens.has_value(); });
  double max_tokens = 0.0;
  if (tokens_known) {
    for (const auto& p : profiles) max_tokens = std::max(max_tokens, *p.mean_tokens);
  }
  std::vector<RadarVector> out;
  for (const auto& p : profiles) {
    RadarVector r;
    r.model_id = p.model_id;
    r.attribution_diversity = p.attribution_entropy;
    r.high_risk_escalation = p.rho_high;
    r.vru_presence = p.vru_rate;
    r.evidence_breadth = p.mu_evidence / risk::kMaxEvidence;
    r.uncertainty_expression = p.mean_uncertainty / risk::kMaxUncertainty;
    if (tokens_known && max_tokens > 0.0) r.relative_tokens = *p.mean_tokens / max_tokens;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace audit
