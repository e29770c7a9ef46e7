#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "guardad/catalog.hpp"
#include "guardad/predicates.hpp"

namespace guardad {

using ConstraintSet = std::set<std::string>;

/// Active constraint ids at one step.
struct SafetyState {
  std::int64_t t = 0;
  ConstraintSet active;

  bool contains(std::string_view id) const { return active.find(std::string(id)) != active.end(); }
  bool operator==(const SafetyState&) const = default;
};

/// One Horn rule instantiation: `rule` fired on `entity`, activating `constraint`.
struct HornFiring {
  std::string rule;
  std::string entity;
  std::string constraint;

  auto operator<=>(const HornFiring&) const = default;
};

struct Instantiation {
  SafetyState state;
  std::vector<HornFiring> firings;  // sorted, unique
};

/// Instantaneous safety state from the step's atoms: a constraint is active
/// when, for some entity binding, every antecedent of a rule concluding it holds.
SafetyState instantiate_constraints(const AtomSet& atoms, const RuleCatalog& catalog, std::int64_t t);

/// Same, also reporting which (rule, entity) bindings fired.
Instantiation instantiate_constraints_detailed(const AtomSet& atoms, const RuleCatalog& catalog,
                                               std::int64_t t);

}  // namespace guardad
