#pragma once

// Rule catalog: safety predicates, action constraints, Horn activation rules
// and weighted temporal rules, as declared in the line-oriented rule DSL.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "guardad/scene.hpp"

namespace guardad {

enum class PredicateCategory { Action, Environment, TargetExistence, TargetMotion };

template <>
struct EnumNames<PredicateCategory> {
  static constexpr std::array names = {std::string_view{"action"}, std::string_view{"environment"},
                                       std::string_view{"target_exists"},
                                       std::string_view{"target_motion"}};
};

/// Unset fields match anything.
struct PredicateSelector {
  std::optional<Action> action;
  std::optional<EntityKind> kind;
  std::optional<Region> region;
  std::optional<MotionTrend> trend;
  std::optional<SignalState> signal;
  std::optional<SignType> sign;

  bool operator==(const PredicateSelector&) const = default;
};

struct PredicateDef {
  std::string name;
  PredicateCategory category = PredicateCategory::TargetExistence;
  PredicateSelector selector;

  bool operator==(const PredicateDef&) const = default;
};

/// Whether `def` holds on `entity`, given the policy's proposed action.
bool predicate_matches(const PredicateDef& def, const Entity& entity, Action proposed);

/// True for the entity kinds that TargetExistence / TargetMotion predicates range over.
constexpr bool is_participant(EntityKind kind) {
  return kind == EntityKind::Vehicle || kind == EntityKind::Pedestrian ||
         kind == EntityKind::Bicycle || kind == EntityKind::Motorcycle || kind == EntityKind::Other;
}

struct Constraint {
  std::string id;
  ActionSet allowed;
  int severity = 1;   // 1..5
  std::string says;   // verbalization template

  bool operator==(const Constraint&) const = default;
};

/// Conjunction of predicates over one entity variable => constraint.
/// Action and Environment predicates bind to their own entity.
struct HornRule {
  std::string id;
  std::vector<std::string> antecedent;
  std::string consequent;
  std::string says;  // optional cause sentence, prepended when verbalizing

  bool operator==(const HornRule&) const = default;
};

/// Constraint active (or, with positive=false, inactive) `lag` steps ago.
struct AtOffset {
  int lag = 1;
  std::string constraint;
  bool positive = true;

  bool operator==(const AtOffset&) const = default;
};

/// Constraint active in at least `at_least` of the last `last` window states.
struct CountAtLeast {
  std::string constraint;
  int at_least = 1;
  int last = 1;

  bool operator==(const CountAtLeast&) const = default;
};

using BodyAtom = std::variant<AtOffset, CountAtLeast>;

struct TemporalRule {
  std::string id;
  double weight = 0.0;
  std::string head;
  std::vector<BodyAtom> body;
  std::string says;

  bool operator==(const TemporalRule&) const = default;
};

/// Immutable, validated catalog. Construction checks every invariant and
/// cross-reference, throwing DuplicateId, UnknownReference, EmptyAllowedSet
/// or CatalogError.
class RuleCatalog {
 public:
  RuleCatalog() = default;
  RuleCatalog(std::vector<PredicateDef> predicates, std::vector<Constraint> constraints,
              std::vector<HornRule> horn_rules, std::vector<TemporalRule> temporal_rules);

  const std::vector<PredicateDef>& predicates() const { return predicates_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }
  const std::vector<HornRule>& horn_rules() const { return horn_rules_; }
  const std::vector<TemporalRule>& temporal_rules() const { return temporal_rules_; }

  const PredicateDef* find_predicate(std::string_view name) const;
  const Constraint* find_constraint(std::string_view id) const;
  const HornRule* find_horn_rule(std::string_view id) const;

  /// Horn rule antecedents resolved to predicate indices.
  const std::vector<std::vector<std::size_t>>& horn_predicate_indices() const { return horn_index_; }
  /// Whether a Horn rule's antecedent contains an Environment predicate.
  bool horn_rule_is_signal(std::size_t rule_index) const { return horn_signal_[rule_index]; }

  /// Copy that keeps only predicates of the given categories. Horn rules
  /// referring to a dropped predicate are dropped too.
  RuleCatalog restricted_to(std::initializer_list<PredicateCategory> categories) const;

 private:
  std::vector<PredicateDef> predicates_;
  std::vector<Constraint> constraints_;
  std::vector<HornRule> horn_rules_;
  std::vector<TemporalRule> temporal_rules_;

  std::map<std::string, std::size_t, std::less<>> predicate_index_;
  std::map<std::string, std::size_t, std::less<>> constraint_index_;
  std::map<std::string, std::size_t, std::less<>> horn_rule_index_;
  std::vector<std::vector<std::size_t>> horn_index_;
  std::vector<bool> horn_signal_;
};

/// Parses rule DSL text. Throws ParseError (with line/column) on syntax
/// errors and the RuleCatalog validation errors on semantic ones.
RuleCatalog parse_catalog(std::string_view text);
RuleCatalog load_catalog(const std::filesystem::path& path);

/// Shipped catalog, in DSL form and parsed.
const std::string& default_catalog_text();
const RuleCatalog& default_catalog();

/// Predicate naming used by the shipped catalog, e.g. Front_Center.
std::string region_token(Region region);

}  // namespace guardad
