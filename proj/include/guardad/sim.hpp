#pragma once

// Synthetic accident-prone scenarios, closed-loop guarded episodes, the
// reaction-window accident oracle, failure taxonomy and suite metrics.
//
// Steps are 1 Hz frames, so a 2.5 s pre-collision window is r = 3 steps.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "guardad/catalog.hpp"
#include "guardad/guard.hpp"
#include "guardad/policy.hpp"
#include "guardad/scene.hpp"

namespace guardad {

enum class ScenarioTemplate { SuddenPedestrianCrossing, ApproachingCyclist, RedLightIntersection, VehicleCutIn, ClearRoad };
enum class HazardKind { Crossing, Approach, RuleSignal, CutIn };
enum class FailureType { EDE, RV, RP, OT };

template <>
struct EnumNames<ScenarioTemplate> {
  static constexpr std::array names = {std::string_view{"SuddenPedestrianCrossing"},
                                       std::string_view{"ApproachingCyclist"},
                                       std::string_view{"RedLightIntersection"}, std::string_view{"VehicleCutIn"},
                                       std::string_view{"ClearRoad"}};
};
template <>
struct EnumNames<HazardKind> {
  static constexpr std::array names = {std::string_view{"Crossing"}, std::string_view{"Approach"},
                                       std::string_view{"RuleSignal"}, std::string_view{"CutIn"}};
};
template <>
struct EnumNames<FailureType> {
  static constexpr std::array names = {std::string_view{"EDE"}, std::string_view{"RV"}, std::string_view{"RP"},
                                       std::string_view{"OT"}};
};

inline constexpr std::int64_t kReactionSteps = 3;
inline constexpr std::int64_t kAbruptLookback = 3;

struct Hazard {
  std::int64_t onset = 0;      // t_a
  std::int64_t collision = 0;  // t_c
  ActionSet safe_set;
  std::string trigger;
  HazardKind kind = HazardKind::Approach;

  bool operator==(const Hazard&) const = default;
};

struct Scenario {
  std::string id;
  std::string template_name;
  std::vector<Observation> steps;
  std::vector<Action> reference_actions;
  std::vector<Hazard> hazards;
  double perception_dropout = 0.0;
  std::uint64_t seed = 0;

  void validate() const;  // throws SchemaError
  PolicyScript script() const;
  bool operator==(const Scenario&) const = default;
};

struct ScenarioParams {
  std::int64_t crossing_gap = 2;  // SuddenPedestrianCrossing onset-to-collision steps
  double perception_dropout = 0.0;
  /// SuddenPedestrianCrossing only: the pedestrian shows for two frames, then
  /// stays occluded through the collision step. Gap becomes 5.
  bool occlusion_flicker = false;
};

ScenarioTemplate parse_template(std::string_view name);  // throws UnknownTemplate

/// Deterministic in (template, count, seed, params). Throws ConfigError for count < 1.
std::vector<Scenario> generate_scenarios(ScenarioTemplate tmpl, std::size_t count, std::uint64_t seed,
                                         const ScenarioParams& params = {});

json to_json(const Scenario& scenario);
Scenario scenario_from_json(const json& j);
Scenario load_scenario(const std::filesystem::path& path);

struct EpisodeTrace {
  std::string scenario_id;
  std::vector<StepRecord> steps;
  std::optional<std::string> abort_reason;  // set when the policy failed
  std::optional<std::int64_t> abort_step;
};

struct EpisodeOutcome {
  bool accident = false;
  std::optional<std::int64_t> accident_step;
  std::size_t steps = 0;
  std::size_t interventions = 0;
  std::size_t false_interventions = 0;
  std::size_t task_matches = 0;
  std::optional<FailureType> failure_type;
  std::vector<bool> hazard_accidents;
  /// A Horn rule bound to the hazard's trigger fired inside its reaction window.
  std::vector<bool> hazard_covered;

  bool operator==(const EpisodeOutcome&) const = default;
};

struct EpisodeOptions {
  std::int64_t reaction_steps = kReactionSteps;
  std::int64_t lookback = kAbruptLookback;
};

struct EpisodeResult {
  EpisodeTrace trace;
  EpisodeOutcome outcome;
};

/// The policy/guard-visible frames: ground truth with seeded perception
/// dropout applied to non-ego entities. Second member lists dropped ids per step.
std::pair<std::vector<Observation>, std::vector<std::vector<std::string>>> perceived_steps(const Scenario& scenario);

/// Closed loop over every step. A PolicyError ends the episode early and the
/// outcome records an OT accident.
EpisodeResult run_episode(const Scenario& scenario, const PolicySpec& policy, const GuardConfig& config,
                          const RuleCatalog& catalog, const EpisodeOptions& options = {});

/// Same loop with a caller-owned policy.
EpisodeResult run_episode(const Scenario& scenario, Policy& policy, const GuardConfig& config,
                          const RuleCatalog& catalog, const EpisodeOptions& options = {});

/// Per hazard: true when no step in [t_c - r, t_c] has a final action in the safe set.
std::vector<bool> accident_oracle(const EpisodeTrace& trace, const Scenario& scenario,
                                  std::int64_t r = kReactionSteps);

/// Throws NoAccident when no hazard was hit and the episode did not abort.
FailureType classify_failure(const EpisodeTrace& trace, const Scenario& scenario,
                             const EpisodeOptions& options = {});

EpisodeOutcome evaluate_episode(const EpisodeTrace& trace, const Scenario& scenario,
                                const EpisodeOptions& options = {});

/// Runs episodes on `jobs` threads; results keep the input order.
std::vector<EpisodeResult> run_suite(const std::vector<Scenario>& scenarios, const PolicySpec& policy,
                                     const GuardConfig& config, const RuleCatalog& catalog, unsigned jobs = 1,
                                     const EpisodeOptions& options = {});

struct MetricsReport {
  std::size_t episodes = 0;
  std::size_t accidents = 0;
  std::size_t steps = 0;
  std::size_t interventions = 0;
  std::size_t false_interventions = 0;
  double accident_rate = 0.0;
  double intervention_rate = 0.0;
  double false_intervention_rate = 0.0;
  double task_score = 0.0;
  std::array<std::size_t, 4> failure_counts{};  // indexed by FailureType

  bool operator==(const MetricsReport&) const = default;
};

MetricsReport compute_metrics(const std::vector<EpisodeOutcome>& outcomes);  // throws EmptyInput

struct MetricsRow {
  std::string label;
  GuardMode mode = GuardMode::Full;
  std::size_t n = 0;
  std::size_t k = 0;
  MetricsReport report;
};

std::string metrics_tsv_header();
std::string metrics_tsv_row(const MetricsRow& row);

json to_json(const EpisodeOutcome& outcome);
EpisodeOutcome outcome_from_json(const json& j);

/// One StepRecord per line, then a summary line carrying the outcome.
std::string trace_jsonl(const EpisodeResult& result, const GuardConfig& config, const std::string& policy);

struct LoadedTrace {
  EpisodeTrace trace;
  EpisodeOutcome outcome;
  GuardMode mode = GuardMode::Full;
  std::size_t n = 0;
  std::size_t k = 0;
};

LoadedTrace load_trace(const std::filesystem::path& path);

/// Writes through a sibling temporary file and a rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace guardad
