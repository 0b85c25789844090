#include "audit/query.hpp"

#include <algorithm>
#include <cmath>

#include "audit/digest.hpp"
#include "audit/error.hpp"
#include "audit/text_format.hpp"

namespace audit {

namespace {

[[noreturn]] void parse_fail(const std::string& path, const std::string& message) {
  throw Error(ErrorKind::parse, message, path);
}

double real_value(const json& v, const std::string& path) {
  if (!v.is_number()) parse_fail(path, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) parse_fail(path, "expected a finite number");
  return d;
}

std::int64_t integer_value(const json& v, const std::string& path) {
  if (!v.is_number_integer()) parse_fail(path, "expected an integer");
  return v.get<std::int64_t>();
}

const json& pair_value(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 2) parse_fail(path, "expected a [min, max] pair");
  return v;
}

template <typename Enum>
std::set<Enum> enum_set(const json& v, const std::string& path,
                        std::optional<Enum> (*parse)(std::string_view) noexcept) {
  if (!v.is_array()) parse_fail(path, "expected an array of names");
  std::set<Enum> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    if (!v[i].is_string()) parse_fail(p, "expected a string");
    auto e = parse(v[i].get<std::string>());
    if (!e) parse_fail(p, "unknown value '" + v[i].get<std::string>() + "'");
    out.insert(*e);
  }
  return out;
}

template <typename Enum>
json enum_names(const std::set<Enum>& values) {
  std::vector<std::string> names;
  for (Enum e : values) names.emplace_back(to_string(e));
  std::sort(names.begin(), names.end());
  return names;
}

json canonical_filter(const ObjectFilter& f) {
  json out = {{"class", to_string(f.object_class)}};
  if (f.max_dist_m) out["max_dist_m"] = static_cast<double>(*f.max_dist_m);
  if (f.lane_rel) out["lane_rel"] = std::vector<int>(f.lane_rel->begin(), f.lane_rel->end());
  return out;
}

bool filter_holds(const ObjectFilter& f, const SceneState& s) {
  return std::any_of(s.objects.begin(), s.objects.end(), [&](const TrackedObject& o) {
    if (o.object_class != f.object_class) return false;
    if (f.max_dist_m && !(o.dist_m <= *f.max_dist_m)) return false;
    if (f.lane_rel && !f.lane_rel->contains(o.lane_rel)) return false;
    return true;
  });
}

}  // namespace

void validate(const ScenarioQuery& q) {
  for (std::size_t i = 0; i < q.object_filters.size(); ++i) {
    const auto& f = q.object_filters[i];
    const std::string path = "object_filters[" + std::to_string(i) + "]";
    if (f.max_dist_m && !(*f.max_dist_m >= 0.0 && std::isfinite(*f.max_dist_m))) {
      throw Error(ErrorKind::parameter, "max_dist_m must be a non-negative distance",
                  path + ".max_dist_m");
    }
    if (f.lane_rel) {
      for (int code : *f.lane_rel) {
        if (!is_valid_lane_rel(code)) {
          throw Error(ErrorKind::parameter,
                      "lane_rel " + std::to_string(code) + " not in {-2, -1, 0, 1, 2, 9}",
                      path + ".lane_rel");
        }
      }
    }
  }
  if (q.ego_speed_mps && !(q.ego_speed_mps->min <= q.ego_speed_mps->max)) {
    throw Error(ErrorKind::parameter, "inverted range: min exceeds max", "ego_speed_mps");
  }
  if (q.time_range && q.time_range->min > q.time_range->max) {
    throw Error(ErrorKind::parameter, "inverted range: t_from exceeds t_to", "time_range");
  }
}

ScenarioQuery query_from_json(const json& value) {
  if (!value.is_object()) parse_fail("$", "query must be a JSON object");
  ScenarioQuery q;
  for (const auto& [key, v] : value.items()) {
    if (key == "object_filters") {
      if (!v.is_array()) parse_fail(key, "expected an array");
      for (std::size_t i = 0; i < v.size(); ++i) {
        const std::string path = key + "[" + std::to_string(i) + "]";
        const json& f = v[i];
        if (!f.is_object()) parse_fail(path, "expected an object");
        ObjectFilter filter;
        bool has_class = false;
        for (const auto& [fk, fv] : f.items()) {
          if (fk == "class") {
            if (!fv.is_string()) parse_fail(path + ".class", "expected a string");
            auto c = parse_object_class(fv.get<std::string>());
            if (!c) parse_fail(path + ".class", "unknown class '" + fv.get<std::string>() + "'");
            filter.object_class = *c;
            has_class = true;
          } else if (fk == "max_dist_m") {
            filter.max_dist_m = real_value(fv, path + ".max_dist_m");
          } else if (fk == "lane_rel") {
            if (!fv.is_array()) parse_fail(path + ".lane_rel", "expected an array");
            std::set<int> codes;
            for (std::size_t j = 0; j < fv.size(); ++j) {
              codes.insert(static_cast<int>(
                  integer_value(fv[j], path + ".lane_rel[" + std::to_string(j) + "]")));
            }
            filter.lane_rel = std::move(codes);
          } else {
            parse_fail(path + "." + fk, "unknown key '" + fk + "'");
          }
        }
        if (!has_class) parse_fail(path + ".class", "missing required field");
        q.object_filters.push_back(std::move(filter));
      }
    } else if (key == "ego_speed_mps") {
      const json& p = pair_value(v, key);
      q.ego_speed_mps = Range<double>{real_value(p[0], key + "[0]"), real_value(p[1], key + "[1]")};
    } else if (key == "weather") {
      q.weather = enum_set<Weather>(v, key, &parse_weather);
    } else if (key == "illumination") {
      q.illumination = enum_set<Illumination>(v, key, &parse_illumination);
    } else if (key == "road_type") {
      q.road_type = enum_set<RoadType>(v, key, &parse_road_type);
    } else if (key == "acquisitions") {
      if (!v.is_array()) parse_fail(key, "expected an array of ids");
      std::set<std::string> ids;
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_string()) parse_fail(key + "[" + std::to_string(i) + "]", "expected a string");
        ids.insert(v[i].get<std::string>());
      }
      q.acquisitions = std::move(ids);
    } else if (key == "time_range") {
      const json& p = pair_value(v, key);
      q.time_range =
          Range<std::int64_t>{integer_value(p[0], key + "[0]"), integer_value(p[1], key + "[1]")};
    } else {
      parse_fail(key, "unknown key '" + key + "'");
    }
  }
  validate(q);
  return q;
}

json to_canonical_json(const ScenarioQuery& q) {
  json out = json::object();
  if (!q.object_filters.empty()) {
    std::vector<std::string> texts;
    for (const auto& f : q.object_filters) texts.push_back(canonical_filter(f).dump());
    std::sort(texts.begin(), texts.end());
    texts.erase(std::unique(texts.begin(), texts.end()), texts.end());
    json filters = json::array();
    for (const auto& t : texts) filters.push_back(json::parse(t));
    out["object_filters"] = std::move(filters);
  }
  if (q.ego_speed_mps) {
    out["ego_speed_mps"] = {static_cast<double>(q.ego_speed_mps->min),
                            static_cast<double>(q.ego_speed_mps->max)};
  }
  if (q.weather) out["weather"] = enum_names(*q.weather);
  if (q.illumination) out["illumination"] = enum_names(*q.illumination);
  if (q.road_type) out["road_type"] = enum_names(*q.road_type);
  if (q.acquisitions) {
    out["acquisitions"] = std::vector<std::string>(q.acquisitions->begin(), q.acquisitions->end());
  }
  if (q.time_range) out["time_range"] = {q.time_range->min, q.time_range->max};
  return out;
}

std::string canonical_query_hash(const ScenarioQuery& query) {
  return sha256_hex(to_canonical_json(query).dump());
}

bool matches(const ScenarioQuery& q, const SceneState& s) {
  if (q.acquisitions && !q.acquisitions->contains(s.acquisition_id)) return false;
  if (q.time_range && !q.time_range->contains(s.t)) return false;
  if (q.ego_speed_mps && !q.ego_speed_mps->contains(s.ego.speed_mps)) return false;
  if (q.weather && !q.weather->contains(s.environment.weather)) return false;
  if (q.illumination && !q.illumination->contains(s.environment.illumination)) return false;
  if (q.road_type && !q.road_type->contains(s.road.type)) return false;
  return std::all_of(q.object_filters.begin(), q.object_filters.end(),
                     [&](const ObjectFilter& f) { return filter_holds(f, s); });
}

ScenarioContext execute_query(const SceneStore& store, const ScenarioQuery& query) {
  validate(query);
  ScenarioContext ctx;
  ctx.query = query;
  ctx.query_hash = canonical_query_hash(query);
  ctx.created_at = utc_timestamp_now();
  store.for_each([&](const SceneState& s) {
    if (matches(query, s)) ctx.hits.push_back({s.acquisition_id, s.t});
  });
  return ctx;
}

json to_json(const ScenarioContext& context) {
  json hits = json::array();
  for (const auto& h : context.hits) hits.push_back({{"acq", h.acquisition_id}, {"t", h.t}});
  return {{"query", to_canonical_json(context.query)},
          {"query_hash", context.query_hash},
          {"created_at", context.created_at},
          {"hits", std::move(hits)}};
}

ScenarioContext scenario_context_from_json(const json& value) {
  if (!value.is_object()) parse_fail("$", "scenario context must be an object");
  ScenarioContext ctx;
  ctx.query = query_from_json(value.value("query", json::object()));
  ctx.query_hash = value.value("query_hash", std::string{});
  ctx.created_at = value.value("created_at", std::string{});
  if (ctx.query_hash != canonical_query_hash(ctx.query)) {
    throw Error(ErrorKind::integrity, "query_hash does not match the embedded query",
                "query_hash");
  }
  const json hits = value.value("hits", json::array());
  if (!hits.is_array()) parse_fail("hits", "expected an array");
  for (std::size_t i = 0; i < hits.size(); ++i) {
    const std::string path = "hits[" + std::to_string(i) + "]";
    const json& h = hits[i];
    if (!h.is_object() || !h.contains("acq") || !h["acq"].is_string()) {
      parse_fail(path, "expected {acq, t}");
    }
    ctx.hits.push_back({h["acq"].get<std::string>(), integer_value(h.value("t", json()), path + ".t")});
  }
  return ctx;
}

}  // namespace audit
