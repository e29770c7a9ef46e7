#include "guardad/catalog.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "guardad/error.hpp"

namespace guardad {

bool predicate_matches(const PredicateDef& def, const Entity& entity, Action proposed) {
  const PredicateSelector& s = def.selector;
  switch (def.category) {
    case PredicateCategory::Action:
      return entity.kind == EntityKind::Ego && s.action == proposed;
    case PredicateCategory::Environment:
      if (entity.kind != EntityKind::TrafficLight && entity.kind != EntityKind::TrafficSign) return false;
      if (s.kind && *s.kind != entity.kind) return false;
      if (s.signal && *s.signal != entity.signal) return false;
      if (s.sign && *s.sign != entity.sign) return false;
      if (s.region && entity.region != s.region) return false;
      return true;
    case PredicateCategory::TargetExistence:
    case PredicateCategory::TargetMotion:
      if (!is_participant(entity.kind)) return false;
      if (s.kind && *s.kind != entity.kind) return false;
      if (s.region && entity.region != s.region) return false;
      if (s.trend && *s.trend != entity.motion) return false;
      return true;
  }
  return false;
}

namespace {

void validate_predicate(const PredicateDef& p) {
  const PredicateSelector& s = p.selector;
  auto fail = [&](const std::string& why) { throw CatalogError("predicate " + p.name + ": " + why); };
  switch (p.category) {
    case PredicateCategory::Action:
      if (!s.action) fail("action predicate needs an action");
      if (s.kind || s.region || s.trend || s.signal || s.sign) fail("action predicate tests only the ego action");
      break;
    case PredicateCategory::Environment:
      if (!s.kind || (*s.kind != EntityKind::TrafficLight && *s.kind != EntityKind::TrafficSign)) {
        fail("environment predicate needs kind=TrafficLight or kind=TrafficSign");
      }
      if (s.action || s.trend) fail("environment predicate cannot test action or trend");
      if (s.signal && *s.kind != EntityKind::TrafficLight) fail("signal applies to TrafficLight only");
      if (s.sign && *s.kind != EntityKind::TrafficSign) fail("sign applies to TrafficSign only");
      break;
    case PredicateCategory::TargetExistence:
    case PredicateCategory::TargetMotion:
      if (s.action || s.signal || s.sign) fail("target predicate cannot test action, signal or sign");
      if (s.kind && !is_participant(*s.kind)) fail("target predicate kind must be a traffic participant");
      if (p.category == PredicateCategory::TargetMotion && !s.trend) fail("target_motion needs a trend");
      if (p.category == PredicateCategory::TargetExistence && s.trend) fail("target_exists cannot test trend");
      break;
  }
}

template <class T, class Key>
std::map<std::string, std::size_t, std::less<>> index_by(const std::vector<T>& items, Key key,
                                                        const char* what) {
  std::map<std::string, std::size_t, std::less<>> index;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const std::string& name = key(items[i]);
    if (name.empty()) throw CatalogError(std::string(what) + " with empty identifier");
    if (!index.emplace(name, i).second) throw DuplicateId(std::string("duplicate ") + what + " '" + name + "'");
  }
  return index;
}

}  // namespace

RuleCatalog::RuleCatalog(std::vector<PredicateDef> predicates, std::vector<Constraint> constraints,
                         std::vector<HornRule> horn_rules, std::vector<TemporalRule> temporal_rules)
    : predicates_(std::move(predicates)),
      constraints_(std::move(constraints)),
      horn_rules_(std::move(horn_rules)),
      temporal_rules_(std::move(temporal_rules)) {
  predicate_index_ = index_by(predicates_, [](const PredicateDef& p) -> const std::string& { return p.name; },
                              "predicate");
  constraint_index_ = index_by(constraints_, [](const Constraint& c) -> const std::string& { return c.id; },
                               "constraint");
  horn_rule_index_ = index_by(horn_rules_, [](const HornRule& r) -> const std::string& { return r.id; },
                              "rule");
  std::set<std::string_view> rule_ids;
  for (const auto& r : horn_rules_) rule_ids.insert(r.id);
  for (const auto& r : temporal_rules_) {
    if (r.id.empty()) throw CatalogError("temporal rule with empty identifier");
    if (!rule_ids.insert(r.id).second) throw DuplicateId("duplicate rule '" + r.id + "'");
  }

  for (const auto& p : predicates_) validate_predicate(p);
  for (const auto& c : constraints_) {
    if (c.allowed.empty()) throw EmptyAllowedSet("constraint " + c.id + " allows no action");
    if (c.severity < 1 || c.severity > 5) throw CatalogError("constraint " + c.id + ": severity must be 1..5");
  }

  for (const auto& r : horn_rules_) {
    if (r.antecedent.empty()) throw CatalogError("rule " + r.id + " has an empty antecedent");
    std::vector<std::size_t> idx;
    bool signal = false;
    for (const auto& name : r.antecedent) {
      auto it = predicate_index_.find(name);
      if (it == predicate_index_.end()) {
        throw UnknownReference("rule " + r.id + " references unknown predicate '" + name + "'");
      }
      idx.push_back(it->second);
      signal = signal || predicates_[it->second].category == PredicateCategory::Environment;
    }
    if (!find_constraint(r.consequent)) {
      throw UnknownReference("rule " + r.id + " references unknown constraint '" + r.consequent + "'");
    }
    horn_index_.push_back(std::move(idx));
    horn_signal_.push_back(signal);
  }

  for (const auto& r : temporal_rules_) {
    if (r.body.empty()) throw CatalogError("temporal rule " + r.id + " has an empty body");
    if (!find_constraint(r.head)) {
      throw UnknownReference("temporal rule " + r.id + " references unknown constraint '" + r.head + "'");
    }
    for (const auto& atom : r.body) {
      const std::string& ref = std::visit([](const auto& a) -> const std::string& { return a.constraint; }, atom);
      if (!find_constraint(ref)) {
        throw UnknownReference("temporal rule " + r.id + " references unknown constraint '" + ref + "'");
      }
      if (const auto* at = std::get_if<AtOffset>(&atom); at && at->lag < 1) {
        throw CatalogError("temporal rule " + r.id + ": offsets must be -1 or older");
      }
      if (const auto* c = std::get_if<CountAtLeast>(&atom)) {
        if (c->last < 1 || c->at_least < 1 || c->at_least > c->last) {
          throw CatalogError("temporal rule " + r.id + ": count needs 1 <= m <= last");
        }
      }
    }
  }
}

const PredicateDef* RuleCatalog::find_predicate(std::string_view name) const {
  auto it = predicate_index_.find(name);
  return it == predicate_index_.end() ? nullptr : &predicates_[it->second];
}

const Constraint* RuleCatalog::find_constraint(std::string_view id) const {
  auto it = constraint_index_.find(id);
  return it == constraint_index_.end() ? nullptr : &constraints_[it->second];
}

const HornRule* RuleCatalog::find_horn_rule(std::string_view id) const {
  auto it = horn_rule_index_.find(id);
  return it == horn_rule_index_.end() ? nullptr : &horn_rules_[it->second];
}

RuleCatalog RuleCatalog::restricted_to(std::initializer_list<PredicateCategory> categories) const {
  auto keep = [&](PredicateCategory c) {
    return std::find(categories.begin(), categories.end(), c) != categories.end();
  };
  std::vector<PredicateDef> preds;
  std::set<std::string_view> kept;
  for (const auto& p : predicates_) {
    if (keep(p.category)) {
      preds.push_back(p);
      kept.insert(p.name);
    }
  }
  std::vector<HornRule> rules;
  for (const auto& r : horn_rules_) {
    if (std::all_of(r.antecedent.begin(), r.antecedent.end(),
                    [&](const std::string& n) { return kept.count(n) > 0; })) {
      rules.push_back(r);
    }
  }
  return RuleCatalog(std::move(preds), constraints_, std::move(rules), temporal_rules_);
}

RuleCatalog load_catalog(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open catalog '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_catalog(buf.str());
}

std::string region_token(Region region) {
  switch (region) {
    case Region::FrontLeft: return "Front_Left";
    case Region::FrontCenter: return "Front_Center";
    case Region::FrontRight: return "Front_Right";
    case Region::Left: return "Left";
    case Region::Right: return "Right";
    case Region::RearLeft: return "Rear_Left";
    case Region::RearCenter: return "Rear_Center";
    case Region::RearRight: return "Rear_Right";
  }
  return {};
}

}  // namespace guardad
