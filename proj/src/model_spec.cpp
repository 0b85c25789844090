#include "audit/model_spec.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>

#include "audit/error.hpp"
#include "audit/risk_codes.hpp"

namespace audit {

namespace {

constexpr std::array<std::string_view, 3> kKindNames{"remote_chat", "remote_multimodal",
                                                     "mock_persona"};

[[noreturn]] void config_fail(const std::string& path, const std::string& message) {
  throw Error(ErrorKind::configuration, message, path);
}

void check_codes(const std::vector<int>& codes, bool (*in_set)(int), const std::string& path,
                 const char* set_text) {
  std::set<int> seen;
  for (int c : codes) {
    if (!in_set(c)) config_fail(path, "code " + std::to_string(c) + " not in " + set_text);
    if (!seen.insert(c).second) config_fail(path, "duplicate code " + std::to_string(c));
  }
}

bool risk_type_code(int v) { return risk::is_risk_type(v); }
bool evidence_code(int v) { return risk::is_evidence_signal(v); }

void validate_persona(const PersonaRules& p) {
  if (!risk::is_level(p.base_level)) config_fail("persona.base_level", "must lie in 0..6");
  for (const auto& [boost, name] : {std::pair{&p.person_near_boost, "persona.person_near_boost"},
                                    std::pair{&p.speed_boost, "persona.speed_boost"}}) {
    if (*boost && !(std::isfinite((*boost)->threshold) && (*boost)->threshold >= 0.0)) {
      config_fail(name, "threshold must be a non-negative number");
    }
  }
  if (p.dominant_factor_policy.empty()) {
    config_fail("persona.dominant_factor_policy", "must list at least one risk type");
  }
  check_codes(p.dominant_factor_policy, &risk_type_code, "persona.dominant_factor_policy", "2..10");
  check_codes(p.evidence_policy, &evidence_code, "persona.evidence_policy", "1..8");
  if (!risk::is_uncertainty(p.uncertainty_value)) {
    config_fail("persona.uncertainty_value", "must lie in 0..3");
  }
}

template <typename T>
T get_as(const json& obj, const char* key, const std::string& path) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    config_fail(path + "." + key, "missing or mistyped field");
  }
}

std::optional<LevelBoost> boost_from_json(const json& obj, const char* key,
                                          const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  const std::string p = path + "." + key;
  if (!it->is_object()) config_fail(p, "expected {threshold, delta}");
  return LevelBoost{get_as<double>(*it, "threshold", p), get_as<int>(*it, "delta", p)};
}

}  // namespace

std::string_view to_string(ModelKind kind) noexcept {
  return kKindNames[static_cast<std::size_t>(kind)];
}

std::optional<ModelKind> parse_model_kind(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == name) return static_cast<ModelKind>(i);
  }
  return std::nullopt;
}

int RetryPolicy::backoff_before(int attempt) const {
  if (attempt <= 1) return 0;
  const double raw = initial_backoff_ms * std::pow(multiplier, attempt - 2);
  return static_cast<int>(std::min<double>(raw, max_backoff_ms));
}

void validate(const ModelSpec& spec) {
  if (spec.model_id.empty()) config_fail("model_id", "must be non-empty");
  if (spec.max_parallel < 1) config_fail("max_parallel", "must be a positive integer");
  if (!(spec.timeout_s > 0.0)) config_fail("timeout_s", "must be positive");
  if (spec.retry.max_attempts < 1) config_fail("retry.max_attempts", "must be at least 1");
  if (spec.retry.initial_backoff_ms < 0 || spec.retry.max_backoff_ms < 0 ||
      !(spec.retry.multiplier >= 1.0)) {
    config_fail("retry", "backoff must be non-negative and non-shrinking");
  }
  if (spec.min_interval_ms < 0) config_fail("min_interval_ms", "must be non-negative");
  switch (spec.kind) {
    case ModelKind::remote_chat:
    case ModelKind::remote_multimodal:
      if (!spec.endpoint || spec.endpoint->empty()) {
        config_fail("endpoint", "remote models require an endpoint");
      }
      if (spec.endpoint->rfind("http://", 0) != 0 && spec.endpoint->rfind("https://", 0) != 0) {
        config_fail("endpoint", "endpoint must be an http:// or https:// URL");
      }
      break;
    case ModelKind::mock_persona:
      if (!spec.persona) config_fail("persona", "mock_persona models require persona rules");
      validate_persona(*spec.persona);
      break;
  }
}

json to_json(const PersonaRules& p) {
  auto boost = [](const std::optional<LevelBoost>& b) -> json {
    if (!b) return nullptr;
    return {{"threshold", b->threshold}, {"delta", b->delta}};
  };
  return {{"base_level", p.base_level},
          {"person_near_boost", boost(p.person_near_boost)},
          {"speed_boost", boost(p.speed_boost)},
          {"dominant_factor_policy", p.dominant_factor_policy},
          {"evidence_policy", p.evidence_policy},
          {"uncertainty_value", p.uncertainty_value}};
}

json to_json(const ModelSpec& s) {
  json out = {{"model_id", s.model_id},
              {"kind", to_string(s.kind)},
              {"max_parallel", s.max_parallel},
              {"timeout_s", s.timeout_s},
              {"retry",
               {{"max_attempts", s.retry.max_attempts},
                {"initial_backoff_ms", s.retry.initial_backoff_ms},
                {"multiplier", s.retry.multiplier},
                {"max_backoff_ms", s.retry.max_backoff_ms}}},
              {"min_interval_ms", s.min_interval_ms}};
  if (s.endpoint) out["endpoint"] = *s.endpoint;
  if (s.remote_model) out["remote_model"] = *s.remote_model;
  if (s.api_key_env) out["api_key_env"] = *s.api_key_env;
  if (s.persona) out["persona"] = to_json(*s.persona);
  return out;
}

PersonaRules persona_rules_from_json(const json& v, const std::string& path) {
  if (!v.is_object()) config_fail(path, "expected an object");
  for (const auto& [key, _] : v.items()) {
    static constexpr std::array<std::string_view, 6> kKeys{
        "base_level",      "person_near_boost", "speed_boost", "dominant_factor_policy",
        "evidence_policy", "uncertainty_value"};
    if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end()) {
      config_fail(path + "." + key, "unknown key");
    }
  }
  PersonaRules p;
  p.base_level = get_as<int>(v, "base_level", path);
  p.person_near_boost = boost_from_json(v, "person_near_boost", path);
  p.speed_boost = boost_from_json(v, "speed_boost", path);
  p.dominant_factor_policy = get_as<std::vector<int>>(v, "dominant_factor_policy", path);
  p.evidence_policy = get_as<std::vector<int>>(v, "evidence_policy", path);
  p.uncertainty_value = get_as<int>(v, "uncertainty_value", path);
  return p;
}

ModelSpec model_spec_from_json(const json& v) {
  if (!v.is_object()) config_fail("$", "model spec must be an object");
  static constexpr std::array<std::string_view, 10> kKeys{
      "model_id", "kind",  "endpoint",    "remote_model", "api_key_env",
      "persona",  "max_parallel", "timeout_s", "retry",   "min_interval_ms"};
  for (const auto& [key, _] : v.items()) {
    if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end()) config_fail(key, "unknown key");
  }
  ModelSpec s;
  s.model_id = get_as<std::string>(v, "model_id", "");
  auto kind = parse_model_kind(get_as<std::string>(v, "kind", ""));
  if (!kind) config_fail("kind", "must be remote_chat, remote_multimodal or mock_persona");
  s.kind = *kind;
  if (v.contains("endpoint")) s.endpoint = get_as<std::string>(v, "endpoint", "");
  if (v.contains("remote_model")) s.remote_model = get_as<std::string>(v, "remote_model", "");
  if (v.contains("api_key_env")) s.api_key_env = get_as<std::string>(v, "api_key_env", "");
  if (v.contains("persona")) s.persona = persona_rules_from_json(v.at("persona"));
  if (v.contains("max_parallel")) s.max_parallel = get_as<int>(v, "max_parallel", "");
  if (v.contains("timeout_s")) s.timeout_s = get_as<double>(v, "timeout_s", "");
  if (v.contains("min_interval_ms")) s.min_interval_ms = get_as<int>(v, "min_interval_ms", "");
  if (auto it = v.find("retry"); it != v.end()) {
    if (!it->is_object()) config_fail("retry", "expected an object");
    s.retry.max_attempts = it->value("max_attempts", s.retry.max_attempts);
    s.retry.initial_backoff_ms = it->value("initial_backoff_ms", s.retry.initial_backoff_ms);
    s.retry.multiplier = it->value("multiplier", s.retry.multiplier);
    s.retry.max_backoff_ms = it->value("max_backoff_ms", s.retry.max_backoff_ms);
  }
  validate(s);
  return s;
}

std::vector<ModelSpec> model_specs_from_json(const json& value) {
  const json* list = &value;
  if (value.is_object() && value.contains("models")) list = &value.at("models");
  if (!list->is_array()) config_fail("models", "expected an array of model specs");
  std::vector<ModelSpec> out;
  std::set<std::string> ids;
  for (std::size_t i = 0; i < list->size(); ++i) {
    try {
      out.push_back(model_spec_from_json((*list)[i]));
    } catch (const Error& e) {
      throw Error(e.kind(), e.message(), "models[" + std::to_string(i) + "]." + e.field_path());
    }
    if (!ids.insert(out.back().model_id).second) {
      config_fail("models[" + std::to_string(i) + "].model_id",
                  "duplicate model id '" + out.back().model_id + "'");
    }
  }
  return out;
}

std::vector<ModelSpec> reference_personas() {
  auto persona = [](std::string id, PersonaRules rules) {
    ModelSpec s;
    s.model_id = std::move(id);
    s.kind = ModelKind::mock_persona;
    s.persona = std::move(rules);
    return s;
  };
  return {
      persona("persona-conservative",
              {3, LevelBoost{10.0, 2}, LevelBoost{8.0, 1}, {2, 5, 4, 8, 7}, {2, 1, 8}, 1}),
      persona("persona-moderate",
              {2, LevelBoost{6.0, 1}, LevelBoost{10.0, 1}, {2, 4, 10, 5, 7}, {1, 2, 3, 4, 7}, 2}),
      persona("persona-tolerant",
              {1, LevelBoost{3.0, 1}, std::nullopt, {10, 2, 4, 9}, {1, 2, 3, 4, 5, 6, 7}, 2}),
  };
}

}  // namespace audit
