#include "guardad/rules.hpp"

#include <algorithm>
#include <map>

namespace guardad {

namespace {
bool binds_own_entity(PredicateCategory c) {
  return c == PredicateCategory::Action || c == PredicateCategory::Environment;
}
}  // namespace

Instantiation instantiate_constraints_detailed(const AtomSet& atoms, const RuleCatalog& catalog,
                                               std::int64_t t) {
  // predicate index -> entities on which it holds (sorted)
  std::map<std::size_t, std::set<std::string_view>> holders;
  for (const GroundAtom& a : atoms) {
    const PredicateDef* def = catalog.find_predicate(a.predicate);
    if (!def) continue;
    holders[static_cast<std::size_t>(def - catalog.predicates().data())].insert(a.entity_id);
  }

  Instantiation out;
  out.state.t = t;
  const auto& rules = catalog.horn_rules();
  for (std::size_t r = 0; r < rules.size(); ++r) {
    std::optional<std::set<std::string_view>> shared;
    std::string_view own_binding;
    bool satisfied = true;
    for (std::size_t p : catalog.horn_predicate_indices()[r]) {
      auto it = holders.find(p);
      if (it == holders.end()) {
        satisfied = false;
        break;
      }
      if (binds_own_entity(catalog.predicates()[p].category)) {
        if (own_binding.empty()) own_binding = *it->second.begin();
        continue;
      }
      if (!shared) {
        shared = it->second;
      } else {
        std::set<std::string_view> both;
        std::set_intersection(shared->begin(), shared->end(), it->second.begin(), it->second.end(),
                              std::inserter(both, both.end()));
        shared = std::move(both);
      }
      if (shared->empty()) {
        satisfied = false;
        break;
      }
    }
    if (!satisfied) continue;

    const HornRule& rule = rules[r];
    out.state.active.insert(rule.consequent);
    if (shared) {
      for (std::string_view e : *shared) out.firings.push_back({rule.id, std::string(e), rule.consequent});
    } else {
      out.firings.push_back({rule.id, std::string(own_binding), rule.consequent});
    }
  }
  std::sort(out.firings.begin(), out.firings.end());
  return out;
}

SafetyState instantiate_constraints(const AtomSet& atoms, const RuleCatalog& catalog, std::int64_t t) {
  return instantiate_constraints_detailed(atoms, catalog, t).state;
}

}  // namespace guardad
