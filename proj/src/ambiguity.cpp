#include "audit/ambiguity.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "audit/error.hpp"
#include "audit/risk_codes.hpp"

namespace audit {

namespace {

void check_cohort(std::span<const RiskAssessment> cohort) {
  if (cohort.size() < 2) {
    throw Error(ErrorKind::insufficient_cohort,
                "disagreement needs at least two assessments, got " + std::to_string(cohort.size()),
                "assessments");
  }
  for (const auto& a : cohort) {
    if (a.window_id != cohort.front().window_id) {
      throw Error(ErrorKind::parameter, "cohort mixes windows " + cohort.front().window_id +
                                            " and " + a.window_id,
                  "window_id");
    }
  }
}

int evidence_count(const RiskAssessment& a) {
  return static_cast<int>(std::set<int>(a.evidence_signals.begin(), a.evidence_signals.end()).size());
}

// Most frequent key; ties go to the smallest key.
int modal_key(const std::vector<int>& keys, std::size_t* frequency) {
  std::map<int, std::size_t> counts;
  for (int k : keys) ++counts[k];
  int best = counts.begin()->first;
  std::size_t best_n = 0;
  for (const auto& [k, n] : counts) {
    if (n > best_n) {
      best = k;
      best_n = n;
    }
  }
  if (frequency) *frequency = best_n;
  return best;
}

}  // namespace

void validate(const DisagreementWeights& w) {
  for (double v : {w.severity, w.escalation, w.evidence, w.factor}) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw Error(ErrorKind::parameter, "weights must be non-negative", "weights");
    }
  }
  if (!(w.severity + w.escalation + w.evidence + w.factor > 0.0)) {
    throw Error(ErrorKind::parameter, "weights must not all be zero", "weights");
  }
}

int dominant_key(const RiskAssessment& a) { return a.dominant_factor().value_or(0); }

bool detect_ambiguity(std::span<const RiskAssessment> cohort, int tau) {
  check_cohort(cohort);
  const auto& first = cohort.front();
  return std::any_of(cohort.begin(), cohort.end(), [&](const RiskAssessment& a) {
    return a.overall_risk_level != first.overall_risk_level ||
           (a.overall_risk_level >= tau) != (first.overall_risk_level >= tau) ||
           evidence_count(a) != evidence_count(first) || dominant_key(a) != dominant_key(first);
  });
}

ScenarioDisagreement composite_uncertainty(std::span<const RiskAssessment> cohort, int tau,
                                           const DisagreementWeights& weights) {
  check_cohort(cohort);
  validate(weights);
  const std::size_t m = cohort.size();

  std::vector<double> levels, counts;
  std::vector<int> factors;
  std::size_t escalated = 0;
  for (const auto& a : cohort) {
    levels.push_back(a.overall_risk_level);
    counts.push_back(evidence_count(a));
    factors.push_back(dominant_key(a));
    if (a.overall_risk_level >= tau) ++escalated;
  }
  const auto [lmin, lmax] = std::minmax_element(levels.begin(), levels.end());
  const auto [cmin, cmax] = std::minmax_element(counts.begin(), counts.end());
  std::size_t f_mode = 0;
  const int mode = modal_key(factors, &f_mode);

  ScenarioDisagreement d;
  d.window_id = cohort.front().window_id;
  d.d_sev = (*lmax - *lmin) / risk::kMaxLevel;
  d.d_esc = (escalated > 0 && escalated < m) ? 1.0 : 0.0;
  d.d_evi = (*cmax - *cmin) / risk::kMaxEvidence;
  // (1 - f/M) / (1 - 1/M), written in integer form to stay exact.
  d.d_fac = static_cast<double>(m - f_mode) / static_cast<double>(m - 1);
  const double wsum = weights.severity + weights.escalation + weights.evidence + weights.factor;
  d.composite = (weights.severity * d.d_sev + weights.escalation * d.d_esc +
                 weights.evidence * d.d_evi + weights.factor * d.d_fac) /
                wsum;
  d.composite = std::clamp(d.composite, 0.0, 1.0);
  d.ambiguous = d.d_sev > 0.0 || d.d_esc > 0.0 || d.d_evi > 0.0 || d.d_fac > 0.0;

  const double level_median = median(levels);
  const double count_median = median(counts);
  const bool majority_escalated = 2 * escalated >= m;
  for (std::size_t i = 0; i < m; ++i) {
    const auto& a = cohort[i];
    const double dev_sev = std::abs(a.overall_risk_level - level_median) / risk::kMaxLevel;
    const double dev_esc = ((a.overall_risk_level >= tau) != majority_escalated) ? 1.0 : 0.0;
    const double dev_evi = std::abs(evidence_count(a) - count_median) / risk::kMaxEvidence;
    const double dev_fac = dominant_key(a) != mode ? 1.0 : 0.0;
    d.per_model_contribution[a.model_id] =
        std::clamp((dev_sev + dev_esc + dev_evi + dev_fac) / 4.0, 0.0, 1.0);
  }
  return d;
}

std::vector<ScenarioDisagreement> sort_by_uncertainty(std::vector<ScenarioDisagreement> scores) {
  std::sort(scores.begin(), scores.end(), [](const auto& a, const auto& b) {
    if (a.composite != b.composite) return a.composite < b.composite;
    return a.window_id < b.window_id;
  });
  return scores;
}

TierPartition tier_partition(std::span<const ScenarioDisagreement> scores) {
  const auto sorted = sort_by_uncertainty({scores.begin(), scores.end()});
  const std::size_t n = sorted.size();
  const std::size_t third = n / 3;
  TierPartition t;
  for (std::size_t i = 0; i < n; ++i) {
    auto& tier = i < third ? t.low : (i < n - third ? t.medium : t.high);
    tier.push_back(sorted[i].window_id);
  }
  return t;
}

HeatmapMatrix heatmap_matrix(std::span<const ScenarioDisagreement> scores) {
  const auto sorted = sort_by_uncertainty({scores.begin(), scores.end()});
  HeatmapMatrix h;
  std::set<std::string> models;
  for (const auto& s : sorted) {
    for (const auto& [model, _] : s.per_model_contribution) models.insert(model);
  }
  h.models.assign(models.begin(), models.end());
  for (const auto& s : sorted) {
    h.window_ids.push_back(s.window_id);
    std::vector<double> row;
    for (const auto& model : h.models) {
      auto it = s.per_model_contribution.find(model);
      row.push_back(it == s.per_model_contribution.end() ? 0.0 : it->second);
    }
    h.cells.push_back(std::move(row));
  }
  return h;
}

std::vector<ScenarioDisagreement> score_windows(const AssessmentsByModel& assessments, int tau,
                                                const DisagreementWeights& weights) {
  std::map<std::string, std::vector<RiskAssessment>> by_window;
  for (const auto& [model, list] : assessments) {
    for (const auto& a : list) by_window[a.window_id].push_back(a);
  }
  std::vector<ScenarioDisagreement> out;
  for (const auto& [window, cohort] : by_window) {
    if (cohort.size() != assessments.size()) continue;
    out.push_back(composite_uncertainty(cohort, tau, weights));
  }
  return out;
}

}  // namespace audit
