#pragma once

// Decision-time safeguard. Per step: ground predicates on the newest frame,
// activate constraints, refine them over the window, test the policy's base
// action, and revise only when it violates an active constraint.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "guardad/catalog.hpp"
#include "guardad/mln.hpp"
#include "guardad/policy.hpp"
#include "guardad/rules.hpp"

namespace guardad {

enum class GuardMode {
  Full,               // prompt-guided re-query, constrained selection if still violating
  PredicateStatic,    // ego-action and traffic-rule predicates only, no temporal induction
  PredicateTargets,   // traffic-participant predicates only, no temporal induction
  ForcedFallback,     // replace a violating action with the fallback action
  ConstrainedSelect,  // best-scoring base action among the allowed ones
  Off,                // analysis only; the base action always passes through
};

template <>
struct EnumNames<GuardMode> {
  static constexpr std::array names = {std::string_view{"full"},          std::string_view{"predicate-static"},
                                       std::string_view{"predicate-targets"}, std::string_view{"forced-fallback"},
                                       std::string_view{"constrained-select"}, std::string_view{"off"}};
};

struct GuardConfig {
  std::size_t n = 4;  // window order
  std::size_t k = 2;  // observation history length passed to the policy is k + 1
  double theta = 1.0;
  int max_retries = 1;
  GuardMode mode = GuardMode::Full;
  Action fallback_action = Action::Stop;

  void validate() const;  // throws ConfigError
};

struct ViolationReport {
  bool delta = false;
  std::vector<std::string> violated;
  ActionSet effective_allowed = ActionSet::all();
};

enum class StrategyNote { Accepted, RevisedByPrompt, ConstrainedFallback, ForcedFallback };

template <>
struct EnumNames<StrategyNote> {
  static constexpr std::array names = {std::string_view{"Accepted"}, std::string_view{"RevisedByPrompt"},
                                       std::string_view{"ConstrainedFallback"},
                                       std::string_view{"ForcedFallback"}};
};

struct StepRecord {
  std::int64_t t = 0;
  SafetyState z_now;
  SafetyState z_refined;
  std::vector<std::string> fired_rules;  // Horn rules, then temporal rules
  Action base_action = Action::Stop;
  bool delta = false;
  std::optional<std::string> prompt;
  int retries_used = 0;
  Action final_action = Action::Stop;
  StrategyNote strategy_note = StrategyNote::Accepted;

  std::vector<std::string> violated;
  ActionSet effective_allowed = ActionSet::all();
  std::vector<HornFiring> firings;
  /// Final action breaks a constraint activated by a traffic-signal rule.
  bool signal_violation = false;
  /// Entities hidden from the engine by simulated perception dropout.
  std::vector<std::string> dropped;

  bool operator==(const StepRecord&) const = default;
};

/// violated = active constraints whose allowed set excludes `action`.
ViolationReport check_violation(Action action, const SafetyState& state, const RuleCatalog& catalog);

/// Drops constraints in ascending severity (ties: ascending id) until the
/// allowed sets intersect. Identity when they already do.
SafetyState resolve_conflicts(const SafetyState& state, const RuleCatalog& catalog);

/// Each violated constraint, most severe first (ties by id): cause sentences
/// of the rules in `fired_rules` that support it, then its template. Horn
/// causes take precedence over temporal ones. Throws EmptyViolationSet.
std::string verbalize(std::span<const std::string> violated, const RuleCatalog& catalog,
                      std::span<const std::string> fired_rules = {});

/// Everything the guard derives for one frame before any revision.
struct StepAnalysis {
  Instantiation instant;
  SafetyState refined;
  std::vector<std::string> fired_temporal;
  SafetyState resolved;
  ViolationReport report;
  ConstraintSet signal_constraints;  // activated by traffic-signal rules of the full catalog
};

/// Mutable per-episode guard state: configuration, catalog view and window.
class GuardSession {
 public:
  GuardSession(GuardConfig config, const RuleCatalog& catalog);
  GuardSession(GuardConfig config, const RuleCatalog& catalog, Window window);

  /// Runs the full pipeline on `history` (newest frame last). PolicyError
  /// from the policy propagates.
  StepRecord step(std::span<const Observation> history, Policy& policy);

  /// Pure analysis of `obs` against the current window; no state change.
  StepAnalysis analyze(const Observation& obs, Action base) const;

  const Window& window() const { return window_; }
  const GuardConfig& config() const { return config_; }
  /// Catalog the pipeline grounds against (restricted in predicate modes).
  const RuleCatalog& catalog() const { return restricted_ ? *restricted_ : *catalog_; }

 private:
  GuardConfig config_;
  const RuleCatalog* catalog_;
  std::optional<RuleCatalog> restricted_;
  Window window_;
};

struct GuardStepResult {
  Action final_action;
  StepRecord record;
  Window window;
};

/// Functional form of GuardSession::step.
GuardStepResult guard_step(std::span<const Observation> history, Policy& policy, Window window,
                           const GuardConfig& config, const RuleCatalog& catalog);

json to_json(const StepRecord& record);
StepRecord step_record_from_json(const json& j);

/// Human-readable rendering of one step.
std::string explain(const StepRecord& record);

}  // namespace guardad
