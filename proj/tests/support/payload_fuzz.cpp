#include "support/payload_fuzz.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

namespace audit::test {

namespace {

int pick(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

std::vector<int> distinct_codes(std::mt19937_64& rng, int lo, int hi, int count) {
  std::vector<int> pool(static_cast<std::size_t>(hi - lo + 1));
  std::iota(pool.begin(), pool.end(), lo);
  std::shuffle(pool.begin(), pool.end(), rng);
  pool.resize(static_cast<std::size_t>(count));
  return pool;
}

std::string list_text(const std::vector<int>& codes) {
  std::string out = "[";
  for (std::size_t i = 0; i < codes.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(codes[i]);
  }
  return out + "]";
}

// Field texts in schema order; mutations edit one entry before assembly.
std::vector<std::pair<std::string, std::string>> fields_of(const RiskAssessment& a) {
  return {{"window_has_risk", std::to_string(a.window_has_risk)},
          {"overall_risk_level", std::to_string(a.overall_risk_level)},
          {"risk_types", list_text(a.risk_types)},
          {"evidence_signals", list_text(a.evidence_signals)},
          {"uncertainty", std::to_string(a.uncertainty)}};
}

std::string assemble(const std::vector<std::pair<std::string, std::string>>& fields,
                     const std::string& sep = ",") {
  std::string out = "{";
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += sep;
    out += "\"" + fields[i].first + "\":" + fields[i].second;
  }
  return out + "}";
}

std::string& field(std::vector<std::pair<std::string, std::string>>& fields,
                   const std::string& name) {
  for (auto& [k, v] : fields) {
    if (k == name) return v;
  }
  return fields.front().second;
}

int out_of_range(std::mt19937_64& rng, int lo, int hi) {
  int v;
  do {
    v = pick(rng, -5, 15);
  } while (v >= lo && v <= hi);
  return v;
}

}  // namespace

RiskAssessment random_valid_assessment(std::mt19937_64& rng) {
  RiskAssessment a;
  a.overall_risk_level = pick(rng, 0, 6);
  a.window_has_risk = a.overall_risk_level >= 1 ? 1 : 0;
  const int min_types = a.overall_risk_level >= 2 ? 1 : 0;
  a.risk_types = distinct_codes(rng, 2, 10, pick(rng, min_types, 4));
  a.evidence_signals = distinct_codes(rng, 1, 8, pick(rng, 1, 5));
  a.uncertainty = pick(rng, 0, 3);
  return a;
}

std::string random_conformant_text(const RiskAssessment& a, std::mt19937_64& rng) {
  auto fields = fields_of(a);
  std::shuffle(fields.begin(), fields.end(), rng);
  static const char* kSeparators[] = {",", ", ", ",\n  ", " ,\t"};
  static const char* kPad[] = {"", " ", "\n", "\r\n", "  \t"};
  return std::string(kPad[pick(rng, 0, 4)]) + assemble(fields, kSeparators[pick(rng, 0, 3)]) +
         kPad[pick(rng, 0, 4)];
}

Mutant random_mutant(std::mt19937_64& rng) {
  const RiskAssessment a = random_valid_assessment(rng);
  auto fields = fields_of(a);
  const std::string clean = assemble(fields);
  switch (pick(rng, 0, 15)) {
    case 0:
      return {"```json\n" + clean + "\n```", RejectionReason::markdown_wrapper, "fence"};
    case 1:
      return {"```\n" + clean + "\n```\n", RejectionReason::markdown_wrapper, "bare fence"};
    case 2:
      return {clean + "\nThis scene shows a pedestrian close to the lane.", RejectionReason::extra_text,
              "trailing prose"};
    case 3:
      return {"Assessment: " + clean, RejectionReason::extra_text, "leading prose"};
    case 4: {
      static const char* kExtra[] = {"\"confidence\":0.9", "\"reason\":\"pedestrian\"",
                                     "\"notes\":[]", "\"risk_type\":2"};
      std::string text = clean;
      text.insert(text.size() - 1, std::string(",") + kExtra[pick(rng, 0, 3)]);
      return {text, RejectionReason::unknown_field, "extra field"};
    }
    case 5:
      field(fields, "overall_risk_level") = std::to_string(out_of_range(rng, 0, 6));
      return {assemble(fields), RejectionReason::code_out_of_range, "level range"};
    case 6:
      field(fields, "window_has_risk") = std::to_string(out_of_range(rng, 0, 1));
      return {assemble(fields), RejectionReason::code_out_of_range, "flag range"};
    case 7: {
      auto types = a.risk_types;
      types.insert(types.begin() + pick(rng, 0, static_cast<int>(types.size())),
                   pick(rng, 0, 1) ? 1 : 11);
      field(fields, "risk_types") = list_text(types);
      return {assemble(fields), RejectionReason::code_out_of_range, "risk type range"};
    }
    case 8: {
      auto ev = a.evidence_signals;
      ev[static_cast<std::size_t>(pick(rng, 0, static_cast<int>(ev.size()) - 1))] =
          out_of_range(rng, 1, 8);
      field(fields, "evidence_signals") = list_text(ev);
      return {assemble(fields), RejectionReason::code_out_of_range, "evidence range"};
    }
    case 9:
      field(fields, "uncertainty") = std::to_string(out_of_range(rng, 0, 3));
      return {assemble(fields), RejectionReason::code_out_of_range, "uncertainty range"};
    case 10: {
      static const char* kNames[] = {"window_has_risk", "overall_risk_level", "uncertainty"};
      auto& v = field(fields, kNames[pick(rng, 0, 2)]);
      v = pick(rng, 0, 1) ? "\"" + v + "\"" : v + ".5";
      return {assemble(fields), RejectionReason::type_mismatch, "scalar type"};
    }
    case 11: {
      auto& v = field(fields, pick(rng, 0, 1) ? "risk_types" : "evidence_signals");
      v = pick(rng, 0, 1) ? "\"" + v + "\"" : std::string("3");
      return {assemble(fields), RejectionReason::type_mismatch, "list type"};
    }
    case 12: {
      fields.erase(fields.begin() + pick(rng, 0, 4));
      return {assemble(fields), RejectionReason::type_mismatch, "missing field"};
    }
    case 13: {
      const bool use_types = !a.risk_types.empty() && pick(rng, 0, 1);
      auto codes = use_types ? a.risk_types : a.evidence_signals;
      codes.push_back(codes[static_cast<std::size_t>(pick(rng, 0, static_cast<int>(codes.size()) - 1))]);
      field(fields, use_types ? "risk_types" : "evidence_signals") = list_text(codes);
      return {assemble(fields), RejectionReason::consistency_violation, "duplicate code"};
    }
    case 14: {
      if (pick(rng, 0, 1)) {
        field(fields, "window_has_risk") = std::to_string(1 - a.window_has_risk);
        return {assemble(fields), RejectionReason::consistency_violation, "flag mismatch"};
      }
      fields.emplace_back("uncertainty", std::to_string(a.uncertainty));
      return {assemble(fields), RejectionReason::consistency_violation, "repeated key"};
    }
    default: {
      if (pick(rng, 0, 1)) {
        return {clean.substr(0, clean.size() - static_cast<std::size_t>(pick(rng, 1, 5))),
                RejectionReason::not_json, "truncated"};
      }
      return {"I cannot determine the risk for this window.", RejectionReason::not_json, "prose"};
    }
  }
}

}  // namespace audit::test
