#include "guardad/predicates.hpp"

namespace guardad {

namespace {
bool grounded(const Entity& e) { return e.visible || e.kind == EntityKind::Ego; }
}  // namespace

std::set<std::string> ground_entities(const Observation& obs) {
  std::set<std::string> ids;
  for (const Entity& e : obs.entities) {
    if (grounded(e)) ids.insert(e.id);
  }
  return ids;
}

AtomSet evaluate_predicates(const Observation& obs, Action proposed, const RuleCatalog& catalog) {
  AtomSet atoms;
  for (const Entity& e : obs.entities) {
    if (!grounded(e)) continue;
    for (const PredicateDef& def : catalog.predicates()) {
      if (predicate_matches(def, e, proposed)) atoms.insert(GroundAtom{def.name, e.id, obs.t});
    }
  }
  return atoms;
}

}  // namespace guardad
