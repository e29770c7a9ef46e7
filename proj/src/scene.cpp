#include "guardad/scene.hpp"

#include <algorithm>
#include <set>

#include "guardad/error.hpp"

namespace guardad {

std::vector<Action> ActionSet::to_vector() const {
  std::vector<Action> out;
  for (Action a : kAllActions) {
    if (contains(a)) out.push_back(a);
  }
  return out;
}

std::string to_string(ActionSet set) {
  std::string out = "{";
  bool first = true;
  for (Action a : set.to_vector()) {
    if (!first) out += ", ";
    out += name_of(a);
    first = false;
  }
  out += "}";
  return out;
}

Action argmax_action(const ActionDistribution& dist) {
  return *argmax_action(dist, ActionSet::all());
}

std::optional<Action> argmax_action(const ActionDistribution& dist, ActionSet allowed) {
  std::optional<Action> best;
  for (Action a : kAllActions) {
    if (!allowed.contains(a)) continue;
    // strict > keeps the earliest action on ties
    if (!best || dist[a] > dist[*best]) best = a;
  }
  return best;
}

const Entity* Observation::find(std::string_view id) const {
  for (const auto& e : entities) {
    if (e.id == id) return &e;
  }
  return nullptr;
}

void validate_observation(const Observation& obs) {
  if (obs.t < 0) throw SchemaError("frame t must be non-negative");
  if (obs.entities.empty() || obs.entities.front().kind != EntityKind::Ego) {
    throw NoEgo("frame " + std::to_string(obs.t) + " has no leading Ego entity");
  }
  std::set<std::string_view> ids;
  for (std::size_t i = 0; i < obs.entities.size(); ++i) {
    const Entity& e = obs.entities[i];
    if (e.id.empty()) throw SchemaError("entity id must be non-empty");
    if (!ids.insert(e.id).second) throw DuplicateEntityId("duplicate entity id '" + e.id + "'");
    if (e.kind == EntityKind::Ego) {
      if (i != 0) throw SchemaError("more than one Ego entity");
      if (e.region) throw SchemaError("Ego entity must not carry a region");
      continue;
    }
    if (!e.region) throw SchemaError("entity '" + e.id + "' is missing a region");
    const bool fixture = e.kind == EntityKind::TrafficLight || e.kind == EntityKind::TrafficSign;
    if (fixture && e.motion != MotionTrend::Stationary) {
      throw SchemaError("traffic control entity '" + e.id + "' must be Stationary");
    }
    if (e.signal != SignalState::None && e.kind != EntityKind::TrafficLight) {
      throw SchemaError("signal set on non-TrafficLight entity '" + e.id + "'");
    }
    if (e.sign != SignType::None && e.kind != EntityKind::TrafficSign) {
      throw SchemaError("sign set on non-TrafficSign entity '" + e.id + "'");
    }
  }
}

namespace {

template <class E>
E require_enum(const json& obj, const char* field) {
  if (!obj.contains(field)) throw SchemaError(std::string("missing field '") + field + "'");
  const json& v = obj.at(field);
  if (!v.is_string()) throw SchemaError(std::string("field '") + field + "' must be a string");
  auto parsed = enum_from<E>(v.get<std::string>());
  if (!parsed) {
    throw SchemaError(std::string("unknown ") + field + " token '" + v.get<std::string>() + "'");
  }
  return *parsed;
}

template <class E>
std::optional<E> optional_enum(const json& obj, const char* field) {
  if (!obj.contains(field) || obj.at(field).is_null()) return std::nullopt;
  return require_enum<E>(obj, field);
}

Entity parse_entity(const json& e) {
  if (!e.is_object()) throw SchemaError("entity must be an object");
  Entity out;
  if (!e.contains("id") || !e.at("id").is_string()) throw SchemaError("entity missing string 'id'");
  out.id = e.at("id").get<std::string>();
  out.kind = require_enum<EntityKind>(e, "kind");
  out.region = optional_enum<Region>(e, "region");
  out.motion = require_enum<MotionTrend>(e, "motion");
  out.signal = optional_enum<SignalState>(e, "signal").value_or(SignalState::None);
  out.sign = optional_enum<SignType>(e, "sign").value_or(SignType::None);
  out.distance_band = optional_enum<DistanceBand>(e, "distance_band").value_or(DistanceBand::Mid);
  if (e.contains("visible") && !e.at("visible").is_null()) {
    if (!e.at("visible").is_boolean()) throw SchemaError("field 'visible' must be a boolean");
    out.visible = e.at("visible").get<bool>();
  }
  return out;
}

}  // namespace

Observation parse_observation(const json& record) {
  if (!record.is_object()) throw SchemaError("frame must be an object");
  Observation obs;
  if (!record.contains("t") || !record.at("t").is_number_integer()) {
    throw SchemaError("missing integer field 't'");
  }
  obs.t = record.at("t").get<std::int64_t>();
  if (record.contains("instruction") && !record.at("instruction").is_null()) {
    if (!record.at("instruction").is_string()) throw SchemaError("field 'instruction' must be a string");
    obs.instruction = record.at("instruction").get<std::string>();
  }
  if (!record.contains("entities") || !record.at("entities").is_array()) {
    throw SchemaError("missing array field 'entities'");
  }
  for (const auto& e : record.at("entities")) obs.entities.push_back(parse_entity(e));

  auto ego = std::find_if(obs.entities.begin(), obs.entities.end(),
                          [](const Entity& e) { return e.kind == EntityKind::Ego; });
  if (ego == obs.entities.end()) throw NoEgo("frame " + std::to_string(obs.t) + " has no Ego entity");
  std::rotate(obs.entities.begin(), ego, ego + 1);
  validate_observation(obs);
  return obs;
}

Observation parse_observation(std::string_view line) {
  json record;
  try {
    record = json::parse(line);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("malformed frame: ") + e.what());
  }
  return parse_observation(record);
}

json to_json(const Observation& obs) {
  json entities = json::array();
  for (const Entity& e : obs.entities) {
    json j;
    j["id"] = e.id;
    j["kind"] = name_of(e.kind);
    if (e.region) j["region"] = name_of(*e.region);
    j["motion"] = name_of(e.motion);
    if (e.signal != SignalState::None) j["signal"] = name_of(e.signal);
    if (e.sign != SignType::None) j["sign"] = name_of(e.sign);
    j["distance_band"] = name_of(e.distance_band);
    j["visible"] = e.visible;
    entities.push_back(std::move(j));
  }
  json out;
  out["t"] = obs.t;
  if (obs.instruction) out["instruction"] = *obs.instruction;
  out["entities"] = std::move(entities);
  return out;
}

std::string serialize(const Observation& obs) { return to_json(obs).dump(); }

}  // namespace guardad
