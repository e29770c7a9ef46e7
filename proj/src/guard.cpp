#include "guardad/guard.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "guardad/error.hpp"
#include "guardad/predicates.hpp"

namespace guardad {

void GuardConfig::validate() const {
  if (n < 1) throw ConfigError("window order n must be >= 1");
  if (max_retries < 0) throw ConfigError("max_retries must be >= 0");
  if (!std::isfinite(theta)) throw ConfigError("theta must be finite");
}

namespace {

const Constraint& constraint_of(const RuleCatalog& catalog, const std::string& id) {
  const Constraint* c = catalog.find_constraint(id);
  if (!c) throw UnknownReference("unknown constraint '" + id + "'");
  return *c;
}

ActionSet allowed_intersection(const ConstraintSet& ids, const RuleCatalog& catalog) {
  ActionSet allowed = ActionSet::all();
  for (const auto& id : ids) allowed = allowed & constraint_of(catalog, id).allowed;
  return allowed;
}

bool uses_temporal_induction(GuardMode mode) {
  return mode != GuardMode::PredicateStatic && mode != GuardMode::PredicateTargets;
}

}  // namespace

ViolationReport check_violation(Action action, const SafetyState& state, const RuleCatalog& catalog) {
  ViolationReport report;
  for (const auto& id : state.active) {
    const Constraint& c = constraint_of(catalog, id);
    report.effective_allowed = report.effective_allowed & c.allowed;
    if (!c.allowed.contains(action)) report.violated.push_back(id);
  }
  report.delta = !report.violated.empty();
  return report;
}

SafetyState resolve_conflicts(const SafetyState& state, const RuleCatalog& catalog) {
  if (!allowed_intersection(state.active, catalog).empty()) return state;
  std::vector<const Constraint*> order;
  for (const auto& id : state.active) order.push_back(&constraint_of(catalog, id));
  std::sort(order.begin(), order.end(), [](const Constraint* a, const Constraint* b) {
    return a->severity != b->severity ? a->severity < b->severity : a->id < b->id;
  });
  SafetyState out = state;
  for (const Constraint* c : order) {
    if (out.active.size() <= 1) break;
    out.active.erase(c->id);
    if (!allowed_intersection(out.active, catalog).empty()) break;
  }
  return out;
}

std::string verbalize(std::span<const std::string> violated, const RuleCatalog& catalog,
                      std::span<const std::string> fired_rules) {
  if (violated.empty()) throw EmptyViolationSet("nothing to verbalize");
  std::vector<const Constraint*> order;
  for (const auto& id : violated) order.push_back(&constraint_of(catalog, id));
  std::sort(order.begin(), order.end(), [](const Constraint* a, const Constraint* b) {
    return a->severity != b->severity ? a->severity > b->severity : a->id < b->id;
  });
  order.erase(std::unique(order.begin(), order.end()), order.end());

  std::vector<std::string> parts;
  auto add_unique = [](std::vector<std::string>& into, const std::string& text) {
    if (!text.empty() && std::find(into.begin(), into.end(), text) == into.end()) into.push_back(text);
  };
  for (const Constraint* c : order) {
    std::vector<std::string> causes;
    for (const auto& rule_id : fired_rules) {
      if (const HornRule* r = catalog.find_horn_rule(rule_id); r && r->consequent == c->id) add_unique(causes, r->says);
    }
    if (causes.empty()) {
      for (const auto& rule_id : fired_rules) {
        for (const TemporalRule& r : catalog.temporal_rules()) {
          if (r.id == rule_id && r.head == c->id) add_unique(causes, r.says);
        }
      }
    }
    for (auto& cause : causes) parts.push_back(std::move(cause));
    parts.push_back(c->says);
  }

  std::string text;
  for (const auto& p : parts) {
    if (p.empty()) continue;
    if (!text.empty()) text += ' ';
    text += p;
  }
  return text;
}

GuardSession::GuardSession(GuardConfig config, const RuleCatalog& catalog)
    : GuardSession(config, catalog, Window(config.n)) {}

GuardSession::GuardSession(GuardConfig config, const RuleCatalog& catalog, Window window)
    : config_(config), catalog_(&catalog), window_(std::move(window)) {
  config_.validate();
  if (window_.order() != config_.n) {
    std::vector<SafetyState> states(window_.states().begin(), window_.states().end());
    window_ = Window::from_history(states, config_.n);
  }
  if (config_.mode == GuardMode::PredicateStatic) {
    restricted_ = catalog.restricted_to({PredicateCategory::Action, PredicateCategory::Environment});
  } else if (config_.mode == GuardMode::PredicateTargets) {
    restricted_ = catalog.restricted_to({PredicateCategory::TargetExistence, PredicateCategory::TargetMotion});
  }
}

StepAnalysis GuardSession::analyze(const Observation& obs, Action base) const {
  const RuleCatalog& cat = catalog();
  StepAnalysis a;
  a.instant = instantiate_constraints_detailed(evaluate_predicates(obs, base, cat), cat, obs.t);
  if (uses_temporal_induction(config_.mode)) {
    InductionResult ind = induce_state(window_, a.instant.state, cat, config_.theta);
    a.refined = std::move(ind.refined);
    a.fired_temporal = std::move(ind.fired_rules);
  } else {
    a.refined = a.instant.state;
  }
  a.resolved = resolve_conflicts(a.refined, cat);
  a.report = check_violation(base, a.resolved, cat);

  const std::vector<HornFiring>* firings = &a.instant.firings;
  Instantiation full;
  if (restricted_) {
    full = instantiate_constraints_detailed(evaluate_predicates(obs, base, *catalog_), *catalog_, obs.t);
    firings = &full.firings;
  }
  for (const HornFiring& f : *firings) {
    const HornRule* r = catalog_->find_horn_rule(f.rule);
    if (r && catalog_->horn_rule_is_signal(static_cast<std::size_t>(r - catalog_->horn_rules().data()))) {
      a.signal_constraints.insert(f.constraint);
    }
  }
  return a;
}

StepRecord GuardSession::step(std::span<const Observation> history, Policy& policy) {
  if (history.empty()) throw ConfigError("guard step needs a non-empty history");
  const Observation& now = history.back();
  const RuleCatalog& cat = catalog();

  const ActionDistribution base_dist = policy.decide(PolicyRequest{history, std::nullopt});
  const Action base = argmax_action(base_dist);
  StepAnalysis a = analyze(now, base);

  StepRecord rec;
  rec.t = now.t;
  rec.z_now = a.instant.state;
  rec.z_refined = a.refined;
  for (const HornRule& r : cat.horn_rules()) {
    if (std::any_of(a.instant.firings.begin(), a.instant.firings.end(),
                    [&](const HornFiring& f) { return f.rule == r.id; })) {
      rec.fired_rules.push_back(r.id);
    }
  }
  rec.fired_rules.insert(rec.fired_rules.end(), a.fired_temporal.begin(), a.fired_temporal.end());
  rec.firings = a.instant.firings;
  rec.base_action = base;
  rec.final_action = base;
  rec.effective_allowed = a.report.effective_allowed;

  if (config_.mode != GuardMode::Off && a.report.delta) {
    rec.delta = true;
    rec.violated = a.report.violated;
    rec.prompt = verbalize(rec.violated, cat, rec.fired_rules);
    const ActionSet allowed = a.report.effective_allowed;
    auto constrained = [&] {
      rec.final_action = *argmax_action(base_dist, allowed);
      rec.strategy_note = StrategyNote::ConstrainedFallback;
    };
    switch (config_.mode) {
      case GuardMode::ForcedFallback:
        rec.final_action = config_.fallback_action;
        rec.strategy_note = StrategyNote::ForcedFallback;
        break;
      case GuardMode::ConstrainedSelect:
        constrained();
        break;
      default: {
        bool revised = false;
        for (int attempt = 1; attempt <= config_.max_retries && !revised; ++attempt) {
          const Action candidate = argmax_action(policy.decide(PolicyRequest{history, rec.prompt}));
          rec.retries_used = attempt;
          if (allowed.contains(candidate)) {
            rec.final_action = candidate;
            rec.strategy_note = StrategyNote::RevisedByPrompt;
            revised = true;
          }
        }
        if (!revised) constrained();
        break;
      }
    }
  }

  for (const auto& id : a.signal_constraints) {
    const Constraint* c = catalog_->find_constraint(id);
    if (c && !c->allowed.contains(rec.final_action)) rec.signal_violation = true;
  }
  window_.push(std::move(a.instant.state));
  return rec;
}

GuardStepResult guard_step(std::span<const Observation> history, Policy& policy, Window window,
                           const GuardConfig& config, const RuleCatalog& catalog) {
  GuardSession session(config, catalog, std::move(window));
  StepRecord rec = session.step(history, policy);
  const Action final_action = rec.final_action;
  return {final_action, std::move(rec), session.window()};
}

namespace {

json id_array(const ConstraintSet& ids) { return json(std::vector<std::string>(ids.begin(), ids.end())); }

template <class E>
E enum_field(const json& j, const char* key) {
  auto v = enum_from<E>(j.at(key).get<std::string>());
  if (!v) throw SchemaError(std::string("unknown token in field '") + key + "'");
  return *v;
}

}  // namespace

json to_json(const StepRecord& r) {
  json j;
  j["t"] = r.t;
  j["z_now"] = id_array(r.z_now.active);
  j["z_refined"] = id_array(r.z_refined.active);
  j["fired_rules"] = r.fired_rules;
  j["base_action"] = std::string(name_of(r.base_action));
  j["delta"] = r.delta;
  if (r.prompt) j["prompt"] = *r.prompt;
  j["retries_used"] = r.retries_used;
  j["final_action"] = std::string(name_of(r.final_action));
  j["strategy_note"] = std::string(name_of(r.strategy_note));
  j["violated"] = r.violated;
  json allowed = json::array();
  for (Action a : r.effective_allowed.to_vector()) allowed.push_back(std::string(name_of(a)));
  j["effective_allowed"] = std::move(allowed);
  json firings = json::array();
  for (const auto& f : r.firings) firings.push_back({{"rule", f.rule}, {"entity", f.entity}, {"constraint", f.constraint}});
  j["firings"] = std::move(firings);
  j["signal_violation"] = r.signal_violation;
  j["dropped"] = r.dropped;
  return j;
}

StepRecord step_record_from_json(const json& j) {
  try {
    StepRecord r;
    r.t = j.at("t").get<std::int64_t>();
    r.z_now = {r.t, j.at("z_now").get<ConstraintSet>()};
    r.z_refined = {r.t, j.at("z_refined").get<ConstraintSet>()};
    r.fired_rules = j.at("fired_rules").get<std::vector<std::string>>();
    r.base_action = enum_field<Action>(j, "base_action");
    r.delta = j.at("delta").get<bool>();
    if (j.contains("prompt")) r.prompt = j.at("prompt").get<std::string>();
    r.retries_used = j.at("retries_used").get<int>();
    r.final_action = enum_field<Action>(j, "final_action");
    r.strategy_note = enum_field<StrategyNote>(j, "strategy_note");
    r.violated = j.value("violated", std::vector<std::string>{});
    r.effective_allowed = ActionSet{};
    for (const auto& name : j.value("effective_allowed", std::vector<std::string>{})) {
      auto a = enum_from<Action>(name);
      if (!a) throw SchemaError("unknown action '" + name + "' in effective_allowed");
      r.effective_allowed.insert(*a);
    }
    if (j.contains("firings")) {
      for (const auto& f : j.at("firings")) {
        r.firings.push_back({f.at("rule").get<std::string>(), f.at("entity").get<std::string>(),
                             f.at("constraint").get<std::string>()});
      }
    }
    r.signal_violation = j.value("signal_violation", false);
    r.dropped = j.value("dropped", std::vector<std::string>{});
    return r;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed step record: ") + e.what());
  }
}

std::string explain(const StepRecord& r) {
  auto join = [](const auto& items) {
    std::string out;
    for (const auto& s : items) {
      if (!out.empty()) out += ", ";
      out += s;
    }
    return out.empty() ? std::string("-") : out;
  };
  std::ostringstream os;
  os << "step t=" << r.t << "\n"
     << "  instantaneous state: {" << join(r.z_now.active) << "}\n"
     << "  refined state:       {" << join(r.z_refined.active) << "}\n"
     << "  fired rules:         " << join(r.fired_rules) << "\n"
     << "  base action:         " << name_of(r.base_action) << "\n"
     << "  violation:           " << (r.delta ? "yes" : "no");
  if (r.delta) os << " (" << join(r.violated) << ")";
  os << "\n";
  if (r.prompt) os << "  prompt:              " << *r.prompt << "\n";
  if (r.retries_used > 0) os << "  re-queries:          " << r.retries_used << "\n";
  os << "  final action:        " << name_of(r.final_action) << "\n"
     << "  strategy:            " << name_of(r.strategy_note) << "\n";
  if (!r.dropped.empty()) os << "  dropped entities:    " << join(r.dropped) << "\n";
  return os.str();
}

}  // namespace guardad
