#include "audit/persona.hpp"

#include <algorithm>

#include "audit/assessment.hpp"
#include "audit/risk_codes.hpp"

namespace audit {

namespace {

bool is_vehicle(ObjectClass c) {
  return c == ObjectClass::car || c == ObjectClass::truck || c == ObjectClass::bus ||
         c == ObjectClass::motorcycle;
}

// Objects per second at which the scene counts as dense traffic.
constexpr std::size_t kDenseObjectCount = 5;

}  // namespace

WindowCues window_cues(const ScenarioWindow& window, const PersonaRules& rules) {
  WindowCues cues;
  bool person = false, cyclist = false, lead_vehicle = false, side_vehicle = false;
  bool intersection = false, low_visibility = false, no_sidewalk = false, dense = false;
  for (const auto& s : window.states) {
    cues.max_ego_speed_mps = std::max(cues.max_ego_speed_mps, s.ego.speed_mps);
    for (const auto& o : s.objects) {
      if (o.object_class == ObjectClass::person) {
        person = true;
        if (!cues.min_person_dist_m || o.dist_m < *cues.min_person_dist_m) {
          cues.min_person_dist_m = o.dist_m;
        }
      }
      if (o.object_class == ObjectClass::cyclist) cyclist = true;
      if (is_vehicle(o.object_class) && o.lane_rel == 0) lead_vehicle = true;
      if (is_vehicle(o.object_class) && (o.lane_rel == 1 || o.lane_rel == -1)) side_vehicle = true;
    }
    intersection = intersection || s.road.type == RoadType::intersection;
    low_visibility = low_visibility || s.environment.weather == Weather::rain ||
                     s.environment.weather == Weather::fog ||
                     s.environment.illumination != Illumination::day;
    no_sidewalk = no_sidewalk || !s.road.sidewalk_present;
    dense = dense || s.objects.size() >= kDenseObjectCount;
  }
  const double speed_limit = rules.speed_boost ? rules.speed_boost->threshold : kDefaultSpeedRiskMps;
  const bool fast = !window.states.empty() && cues.max_ego_speed_mps >= speed_limit;

  auto& a = cues.applicable_risk_types;
  if (person) a.push_back(risk::kPedestrian);
  if (cyclist) a.push_back(risk::kCyclist);
  if (lead_vehicle) a.push_back(risk::kRearEnd);
  if (side_vehicle) a.push_back(risk::kLateralConflict);
  if (intersection) a.push_back(risk::kIntersection);
  if (fast) a.push_back(risk::kSpeed);
  if (low_visibility) a.push_back(risk::kVisibility);
  if (no_sidewalk && person) a.push_back(risk::kInfrastructure);
  if (dense) a.push_back(risk::kTrafficDensity);
  return cues;
}

std::string mock_persona_respond(const RenderedPrompt& prompt, const ScenarioWindow& window,
                                 const PersonaRules& rules) {
  const WindowCues cues = window_cues(window, rules);

  int level = rules.base_level;
  if (rules.person_near_boost && cues.min_person_dist_m &&
      *cues.min_person_dist_m <= rules.person_near_boost->threshold) {
    level += rules.person_near_boost->delta;
  }
  if (rules.speed_boost && !window.states.empty() &&
      cues.max_ego_speed_mps >= rules.speed_boost->threshold) {
    level += rules.speed_boost->delta;
  }
  level = std::clamp(level, 0, 6);

  RiskAssessment a;
  a.window_id = prompt.window_id;
  a.overall_risk_level = level;
  a.window_has_risk = risk::window_has_risk_for(level) ? 1 : 0;
  for (int code : rules.dominant_factor_policy) {
    if (std::find(cues.applicable_risk_types.begin(), cues.applicable_risk_types.end(), code) !=
        cues.applicable_risk_types.end()) {
      a.risk_types.push_back(code);
    }
  }
  if (a.risk_types.empty() && level >= 2) a.risk_types.push_back(rules.dominant_factor_policy.front());
  a.evidence_signals = rules.evidence_policy;
  a.uncertainty = rules.uncertainty_value;
  return to_payload(a);
}

TokenUsage estimate_token_usage(const std::string& prompt_text, const std::string& completion) {
  auto tokens = [](std::size_t bytes) { return static_cast<std::int64_t>((bytes + 3) / 4); };
  return {tokens(prompt_text.size()), tokens(completion.size())};
}

}  // namespace audit
