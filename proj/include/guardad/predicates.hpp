#pragma once

#include <compare>
#include <cstdint>
#include <set>
#include <string>

#include "guardad/catalog.hpp"
#include "guardad/scene.hpp"

namespace guardad {

/// A predicate applied to one entity at one step.
struct GroundAtom {
  std::string predicate;
  std::string entity_id;
  std::int64_t t = 0;

  auto operator<=>(const GroundAtom&) const = default;
};

using AtomSet = std::set<GroundAtom>;

/// Ids of the entities the engine reasons about at this step: every visible
/// entity plus the Ego, which is always instantiated.
std::set<std::string> ground_entities(const Observation& obs);

/// All atoms whose predicate holds on a grounded entity. Action predicates
/// are instantiated from `proposed` and bind to the Ego.
AtomSet evaluate_predicates(const Observation& obs, Action proposed, const RuleCatalog& catalog);

}  // namespace guardad
