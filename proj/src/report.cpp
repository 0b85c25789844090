#include "audit/report.hpp"

#include <algorithm>
#include <set>
#include <tuple>

#include "audit/error.hpp"
#include "audit/risk_codes.hpp"
#include "audit/text_format.hpp"

namespace audit {

namespace {

template <typename T>
bool by_triple(const T& a, const T& b) {
  return std::tie(a.prompt_hash, a.window_id, a.model_id) <
         std::tie(b.prompt_hash, b.window_id, b.model_id);
}

std::string csv_line(const std::vector<std::string>& cells) { return join(cells, ",") + "\n"; }

std::string select_prompt(std::span<const RunRecord> records, const ReportOptions& options) {
  std::set<std::string> hashes;
  for (const auto& r : records) hashes.insert(r.prompt_hash);
  if (options.prompt_hash) {
    if (!hashes.empty() && !hashes.contains(*options.prompt_hash)) {
      throw Error(ErrorKind::not_found, "run has no records for prompt " + *options.prompt_hash,
                  "prompt_hash");
    }
    return *options.prompt_hash;
  }
  if (hashes.size() > 1) {
    throw Error(ErrorKind::parameter, "run used several prompts; choose one by prompt_hash",
                "prompt_hash");
  }
  return hashes.empty() ? std::string{} : *hashes.begin();
}

json labels_json(const std::optional<BehaviorLabels>& l) {
  if (!l) return nullptr;
  return {{"risk_posture", l->risk_posture},
          {"escalation_sensitivity", l->escalation_sensitivity},
          {"reasoning_breadth", l->reasoning_breadth},
          {"attribution", l->attribution}};
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

ParsedRun parse_run(std::span<const RunRecord> records) {
  ParsedRun out;
  std::set<std::tuple<std::string, std::string, std::string>> seen;
  for (const auto& r : records) {
    if (!seen.emplace(r.prompt_hash, r.window_id, r.model_id).second) {
      throw Error(ErrorKind::integrity,
                  "duplicate record for window " + r.window_id + ", model " + r.model_id,
                  "records");
    }
    if (r.status != RunStatus::ok) continue;
    auto outcome = parse_assessment(r);
    if (auto* a = std::get_if<RiskAssessment>(&outcome)) {
      out.assessments.push_back(std::move(*a));
    } else {
      out.rejections.push_back(std::get<ParseRejection>(std::move(outcome)));
    }
  }
  std::sort(out.assessments.begin(), out.assessments.end(), by_triple<RiskAssessment>);
  std::sort(out.rejections.begin(), out.rejections.end(), by_triple<ParseRejection>);
  return out;
}

std::string to_jsonl(const std::vector<RiskAssessment>& assessments) {
  std::string out;
  for (const auto& a : assessments) out += to_json(a).dump() + "\n";
  return out;
}

std::string to_jsonl(const std::vector<ParseRejection>& rejections) {
  std::string out;
  for (const auto& r : rejections) out += to_json(r).dump() + "\n";
  return out;
}

ReportBundle build_report(std::span<const RunRecord> all_records, const ReportOptions& options) {
  validate(options.analysis);
  validate(options.weights);
  const std::string prompt_hash = select_prompt(all_records, options);

  std::vector<RunRecord> records;
  for (const auto& r : all_records) {
    if (r.prompt_hash == prompt_hash) records.push_back(r);
  }
  const ParsedRun parsed = parse_run(records);

  std::set<std::string> models, windows;
  CompletionTokens tokens;
  for (const auto& r : records) {
    models.insert(r.model_id);
    windows.insert(r.window_id);
    if (r.status == RunStatus::ok && r.token_usage) {
      tokens[r.model_id][r.window_id] = r.token_usage->completion_tokens;
    }
  }

  AssessmentsByModel accepted;
  for (const auto& a : parsed.assessments) accepted[a.model_id].push_back(a);

  json excluded_models = json::array();
  for (const auto& m : models) {
    if (!accepted.contains(m)) {
      excluded_models.push_back({{"model_id", m}, {"reason", "no accepted assessments"}});
    }
  }

  // Windows scored by every remaining model.
  json excluded_windows = json::array();
  std::set<std::string> common;
  for (const auto& w : windows) {
    std::vector<std::string> missing;
    for (const auto& [m, list] : accepted) {
      const bool has = std::any_of(list.begin(), list.end(),
                                   [&](const RiskAssessment& a) { return a.window_id == w; });
      if (!has) missing.push_back(m);
    }
    if (missing.empty() && !accepted.empty()) {
      common.insert(w);
    } else {
      excluded_windows.push_back({{"window_id", w}, {"missing_models", missing}});
    }
  }
  AssessmentsByModel covered;
  for (const auto& [m, list] : accepted) {
    auto& dst = covered[m];
    for (const auto& a : list) {
      if (common.contains(a.window_id)) dst.push_back(a);
    }
  }

  std::vector<ModelProfile> profiles;
  std::vector<std::string> notes;
  if (!covered.empty() && !common.empty()) {
    profiles = compute_profiles(covered, options.analysis, tokens);
    if (profiles.size() >= 2) {
      assign_labels(profiles, options.analysis);
    } else {
      notes.push_back("labels need a cohort of at least two models");
    }
  }
  const auto radar = radar_summary(profiles);

  std::vector<ScenarioDisagreement> scores;
  if (covered.size() >= 2 && !common.empty()) {
    scores = sort_by_uncertainty(score_windows(covered, options.analysis.tau, options.weights));
  } else {
    notes.push_back("disagreement scoring needs at least two models with common windows");
  }
  const TierPartition tiers = tier_partition(scores);
  const HeatmapMatrix heatmap = heatmap_matrix(scores);
  std::map<std::string, std::string> tier_of;
  for (const auto& w : tiers.low) tier_of[w] = "low";
  for (const auto& w : tiers.medium) tier_of[w] = "medium";
  for (const auto& w : tiers.high) tier_of[w] = "high";

  // report.json
  json profiles_json = json::array();
  for (const auto& p : profiles) {
    json dist = json::object();
    for (const auto& [code, n] : p.factor_dist) dist[std::to_string(code)] = n;
    profiles_json.push_back({{"model_id", p.model_id},
                             {"windows", p.windows},
                             {"mu_risk", p.mu_risk},
                             {"rho_high", p.rho_high},
                             {"mu_evidence", p.mu_evidence},
                             {"factor_dist", dist},
                             {"attribution_entropy", p.attribution_entropy},
                             {"vru_rate", p.vru_rate},
                             {"mean_uncertainty", p.mean_uncertainty},
                             {"mean_tokens", optional_number(p.mean_tokens)},
                             {"labels", labels_json(p.labels)}});
  }
  json radar_json = json::array();
  for (const auto& r : radar) {
    json axes = {{"attribution_diversity", r.attribution_diversity},
                 {"high_risk_escalation", r.high_risk_escalation},
                 {"vru_presence", r.vru_presence},
                 {"evidence_breadth", r.evidence_breadth},
                 {"uncertainty_expression", r.uncertainty_expression}};
    if (r.relative_tokens) axes["relative_tokens"] = *r.relative_tokens;
    radar_json.push_back({{"model_id", r.model_id}, {"axes", axes}});
  }
  json uncertainty_json = json::array();
  for (const auto& s : scores) {
    uncertainty_json.push_back({{"window_id", s.window_id},
                                {"d_sev", s.d_sev},
                                {"d_esc", s.d_esc},
                                {"d_evi", s.d_evi},
                                {"d_fac", s.d_fac},
                                {"composite", s.composite},
                                {"ambiguous", s.ambiguous},
                                {"tier", tier_of[s.window_id]},
                                {"per_model_contribution", s.per_model_contribution}});
  }

  const json report = {
      {"schema_version", kReportSchemaVersion},
      {"prompt_hash", prompt_hash},
      {"config",
       {{"tau", options.analysis.tau},
        {"entropy_threshold", options.analysis.entropy_threshold},
        {"weights",
         {{"severity", options.weights.severity},
          {"escalation", options.weights.escalation},
          {"evidence", options.weights.evidence},
          {"factor", options.weights.factor}}}}},
      {"models", std::vector<std::string>(models.begin(), models.end())},
      {"windows_total", windows.size()},
      {"windows_scored", common.size()},
      {"strictness", to_json(strictness_report(records))},
      {"profiles", profiles_json},
      {"radar", radar_json},
      {"uncertainty", uncertainty_json},
      {"tiers", {{"low", tiers.low}, {"medium", tiers.medium}, {"high", tiers.high}}},
      {"annex",
       {{"excluded_models", excluded_models},
        {"excluded_windows", excluded_windows},
        {"notes", notes}}},
  };

  ReportBundle bundle;
  bundle.report_json = report.dump(2) + "\n";

  // Plot tables.
  std::string mean_risk = csv_line({"model_id", "mu_risk"});
  std::string high_rate = csv_line({"model_id", "rho_high"});
  std::string evidence = csv_line({"model_id", "mu_evidence"});
  std::vector<std::string> factor_header{"model_id"};
  for (int c = risk::kMinRiskType; c <= risk::kMaxRiskType; ++c) factor_header.push_back(std::to_string(c));
  std::string factors = csv_line(factor_header);
  for (const auto& p : profiles) {
    mean_risk += csv_line({p.model_id, format_shortest(p.mu_risk)});
    high_rate += csv_line({p.model_id, format_shortest(p.rho_high)});
    evidence += csv_line({p.model_id, format_shortest(p.mu_evidence)});
    std::vector<std::string> row{p.model_id};
    for (int c = risk::kMinRiskType; c <= risk::kMaxRiskType; ++c) {
      auto it = p.factor_dist.find(c);
      row.push_back(std::to_string(it == p.factor_dist.end() ? 0 : it->second));
    }
    factors += csv_line(row);
  }

  const bool with_tokens = std::any_of(radar.begin(), radar.end(),
                                       [](const RadarVector& r) { return r.relative_tokens.has_value(); });
  std::vector<std::string> radar_header{"model_id",         "attribution_diversity",
                                        "high_risk_escalation", "vru_presence",
                                        "evidence_breadth", "uncertainty_expression"};
  if (with_tokens) radar_header.push_back("relative_tokens");
  std::string radar_csv = csv_line(radar_header);
  for (const auto& r : radar) {
    std::vector<std::string> row{r.model_id,
                                 format_shortest(r.attribution_diversity),
                                 format_shortest(r.high_risk_escalation),
                                 format_shortest(r.vru_presence),
                                 format_shortest(r.evidence_breadth),
                                 format_shortest(r.uncertainty_expression)};
    if (with_tokens) row.push_back(format_shortest(r.relative_tokens.value_or(0.0)));
    radar_csv += csv_line(row);
  }

  std::string uncertainty_csv =
      csv_line({"window_id", "d_sev", "d_esc", "d_evi", "d_fac", "composite", "tier"});
  for (const auto& s : scores) {
    uncertainty_csv += csv_line({s.window_id, format_shortest(s.d_sev), format_shortest(s.d_esc),
                                 format_shortest(s.d_evi), format_shortest(s.d_fac),
                                 format_shortest(s.composite), tier_of[s.window_id]});
  }

  std::vector<std::string> heat_header{"window_id"};
  heat_header.insert(heat_header.end(), heatmap.models.begin(), heatmap.models.end());
  std::string heatmap_csv = csv_line(heat_header);
  for (std::size_t i = 0; i < heatmap.window_ids.size(); ++i) {
    std::vector<std::string> row{heatmap.window_ids[i]};
    for (double v : heatmap.cells[i]) row.push_back(format_shortest(v));
    heatmap_csv += csv_line(row);
  }

  bundle.csv = {{"mean_risk.csv", mean_risk},         {"high_risk_rate.csv", high_rate},
                {"evidence_count.csv", evidence},     {"risk_factors.csv", factors},
                {"radar.csv", radar_csv},             {"uncertainty.csv", uncertainty_csv},
                {"heatmap.csv", heatmap_csv}};
  return bundle;
}

}  // namespace audit
