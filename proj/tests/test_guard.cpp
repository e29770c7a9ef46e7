#include <doctest.h>

#include "guardad/error.hpp"
#include "guardad/guard.hpp"
#include "support.hpp"

using namespace guardad;
using testing::frame;
using testing::participant;
using testing::scores;
using testing::ScriptedPolicy;

namespace {

SafetyState active(std::initializer_list<std::string> ids) { return SafetyState{0, ConstraintSet(ids)}; }

const RuleCatalog& conflict_catalog() {
  static const RuleCatalog c = parse_catalog(R"(
constraint C_STOP_ONLY allow {Stop} severity 5 says "Stop now."
constraint C_KEEP_MOVING allow {KeepSpeed, Accelerate} severity 2 says "Keep moving."
constraint C_NO_STOP allow {Decelerate, KeepSpeed} severity 2 says "Do not stop."
constraint C_SLOW allow {Stop, Decelerate} severity 4 says "Slow down."
constraint C_A allow {TurnLeft} severity 3 says "a"
constraint C_B allow {TurnRight} severity 3 says "b"
)");
  return c;
}

ActionSet intersection(const ConstraintSet& ids, const RuleCatalog& cat) {
  ActionSet s = ActionSet::all();
  for (const auto& id : ids) s = s & cat.find_constraint(id)->allowed;
  return s;
}

// Oracle: the documented drop order applied by straightforward simulation.
ConstraintSet oracle_resolve(const ConstraintSet& ids, const RuleCatalog& cat) {
  std::vector<std::string> order(ids.begin(), ids.end());
  std::stable_sort(order.begin(), order.end(), [&](const std::string& a, const std::string& b) {
    return cat.find_constraint(a)->severity < cat.find_constraint(b)->severity;
  });
  ConstraintSet cur = ids;
  for (const auto& id : order) {
    if (!intersection(cur, cat).empty() || cur.size() <= 1) break;
    cur.erase(id);
  }
  return cur;
}

Observation red_light_frame(std::int64_t t) { return frame(t, {testing::light("tl1", SignalState::Red)}); }

}  // namespace

TEST_CASE("check_violation examples") {
  const RuleCatalog& cat = default_catalog();
  const auto v = check_violation(Action::KeepSpeed, active({"C_STOP_OR_DECEL"}), cat);
  CHECK(v.delta);
  CHECK(v.violated == std::vector<std::string>{"C_STOP_OR_DECEL"});
  CHECK(v.effective_allowed == ActionSet{Action::Stop, Action::Decelerate});
  CHECK_FALSE(check_violation(Action::Decelerate, active({"C_STOP_OR_DECEL"}), cat).delta);
  for (Action a : kAllActions) {
    const auto e = check_violation(a, active({}), cat);
    CHECK_FALSE(e.delta);
    CHECK(e.effective_allowed == ActionSet::all());
  }
}

TEST_CASE("resolve_conflicts examples") {
  const RuleCatalog& cat = conflict_catalog();
  CHECK(resolve_conflicts(active({"C_STOP_ONLY", "C_KEEP_MOVING"}), cat).active == ConstraintSet{"C_STOP_ONLY"});
  CHECK(resolve_conflicts(active({"C_SLOW", "C_NO_STOP"}), cat).active == ConstraintSet{"C_SLOW", "C_NO_STOP"});
  CHECK(resolve_conflicts(active({"C_KEEP_MOVING"}), cat).active == ConstraintSet{"C_KEEP_MOVING"});
  // equal severity: the lexicographically smaller id goes first
  CHECK(resolve_conflicts(active({"C_A", "C_B"}), cat).active == ConstraintSet{"C_B"});
}

TEST_CASE("resolve_conflicts matches the drop-order oracle on every subset") {
  const RuleCatalog& cat = conflict_catalog();
  const auto& cs = cat.constraints();
  for (unsigned mask = 0; mask < (1u << cs.size()); ++mask) {
    ConstraintSet ids;
    for (std::size_t i = 0; i < cs.size(); ++i) {
      if ((mask >> i) & 1u) ids.insert(cs[i].id);
    }
    const ConstraintSet got = resolve_conflicts(SafetyState{0, ids}, cat).active;
    CHECK(got == oracle_resolve(ids, cat));
    if (!ids.empty()) {
      CHECK_FALSE(got.empty());
      CHECK_FALSE(intersection(got, cat).empty());
    }
  }
}

TEST_CASE("verbalize") {
  const RuleCatalog& cat = default_catalog();
  const std::vector<std::string> violated{"C_STOP_OR_DECEL"};
  const std::vector<std::string> fired{"R_red"};
  CHECK(verbalize(violated, cat, fired) == "Red light detected. Only actions that stop or decelerate are allowed.");
  CHECK(verbalize(violated, cat) == "Only actions that stop or decelerate are allowed.");
  CHECK_THROWS_AS(verbalize(std::vector<std::string>{}, cat), EmptyViolationSet);

  const std::vector<std::string> two{"C_YIELD", "C_STOP_OR_DECEL"};
  const std::string text = verbalize(two, cat);
  CHECK(text.find(cat.find_constraint("C_STOP_OR_DECEL")->says) < text.find(cat.find_constraint("C_YIELD")->says));
  CHECK(text == verbalize(std::vector<std::string>{"C_STOP_OR_DECEL", "C_YIELD"}, cat));

  // temporal causes only when no Horn rule supports the constraint
  const std::vector<std::string> temporal_only{"T_count"};
  CHECK(verbalize(violated, cat, temporal_only) ==
        "A hazard was present in recent frames. Only actions that stop or decelerate are allowed.");
  const std::vector<std::string> both{"R_bike", "R_red", "T_count"};
  CHECK(verbalize(violated, cat, both) ==
        "Cyclist approaching ahead. Red light detected. Only actions that stop or decelerate are allowed.");
}

TEST_CASE("no constraints: base action passes") {
  ScriptedPolicy policy(ActionDistribution::one_hot(Action::KeepSpeed), ActionDistribution::one_hot(Action::Stop));
  const std::vector<Observation> hist{frame(0)};
  const auto r = guard_step(hist, policy, Window(4), GuardConfig{}, default_catalog());
  CHECK(r.final_action == Action::KeepSpeed);
  CHECK(r.record.strategy_note == StrategyNote::Accepted);
  CHECK_FALSE(r.record.delta);
  CHECK_FALSE(r.record.prompt);
  CHECK(policy.calls == 1);
  CHECK(r.window.size() == 1);
}

TEST_CASE("red light: re-query follows the prompt") {
  ScriptedPolicy policy(ActionDistribution::one_hot(Action::KeepSpeed), ActionDistribution::one_hot(Action::Decelerate));
  const std::vector<Observation> hist{red_light_frame(0)};
  const auto r = guard_step(hist, policy, Window(4), GuardConfig{}, default_catalog());
  CHECK(r.final_action == Action::Decelerate);
  CHECK(r.record.strategy_note == StrategyNote::RevisedByPrompt);
  CHECK(r.record.retries_used == 1);
  CHECK(r.record.delta);
  REQUIRE(r.record.prompt);
  CHECK(*r.record.prompt == "Red light detected. Only actions that stop or decelerate are allowed.");
  CHECK(policy.last_prompt == *r.record.prompt);
  CHECK(policy.last_instruction == "Drive to the next intersection. " + *r.record.prompt);
  CHECK(r.record.signal_violation == false);
}

TEST_CASE("red light: ignored prompt falls back to constrained selection") {
  const auto base = scores({{Action::KeepSpeed, 0.6}, {Action::Decelerate, 0.3}, {Action::Stop, 0.1}});
  ScriptedPolicy policy(base, base);
  const std::vector<Observation> hist{red_light_frame(0)};
  const auto r = guard_step(hist, policy, Window(4), GuardConfig{}, default_catalog());
  CHECK(r.final_action == Action::Decelerate);
  CHECK(r.record.strategy_note == StrategyNote::ConstrainedFallback);
  CHECK(r.record.retries_used == 1);
  // oracle: restricted argmax over the allowed set
  CHECK(r.final_action == *argmax_action(base, ActionSet{Action::Stop, Action::Decelerate}));
}

TEST_CASE("bounded queries") {
  for (int retries = 0; retries <= 3; ++retries) {
    ScriptedPolicy policy(ActionDistribution::one_hot(Action::KeepSpeed), ActionDistribution::one_hot(Action::Accelerate));
    GuardConfig cfg;
    cfg.max_retries = retries;
    const std::vector<Observation> hist{red_light_frame(0)};
    const auto r = guard_step(hist, policy, Window(4), cfg, default_catalog());
    CHECK(policy.calls == 1 + retries);
    CHECK(r.record.retries_used == retries);
    CHECK(r.final_action == Action::Stop);  // all-zero base scores inside the allowed set: first allowed
  }
}

TEST_CASE("forced fallback and constrained select") {
  const auto base = scores({{Action::KeepSpeed, 0.6}, {Action::Decelerate, 0.3}});
  const std::vector<Observation> hist{red_light_frame(0)};
  {
    ScriptedPolicy policy(base, base);
    GuardConfig cfg;
    cfg.mode = GuardMode::ForcedFallback;
    const auto r = guard_step(hist, policy, Window(4), cfg, default_catalog());
    CHECK(r.final_action == Action::Stop);
    CHECK(r.record.strategy_note == StrategyNote::ForcedFallback);
    CHECK(r.record.prompt);
    CHECK(policy.calls == 1);
  }
  {
    ScriptedPolicy policy(base, base);
    GuardConfig cfg;
    cfg.mode = GuardMode::ConstrainedSelect;
    const auto r = guard_step(hist, policy, Window(4), cfg, default_catalog());
    CHECK(r.final_action == Action::Decelerate);
    CHECK(r.record.strategy_note == StrategyNote::ConstrainedFallback);
    CHECK(policy.calls == 1);
  }
  {
    ScriptedPolicy policy(base, base);
    GuardConfig cfg;
    cfg.mode = GuardMode::Off;
    const auto r = guard_step(hist, policy, Window(4), cfg, default_catalog());
    CHECK(r.final_action == Action::KeepSpeed);
    CHECK_FALSE(r.record.delta);
    CHECK(r.record.z_now.active == ConstraintSet{"C_STOP_OR_DECEL"});
    CHECK(r.record.signal_violation);
  }
}

TEST_CASE("predicate modes restrict the catalog and skip induction") {
  const auto base = ActionDistribution::one_hot(Action::KeepSpeed);
  const std::vector<Observation> cyclist{
      frame(0, {participant("b", EntityKind::Bicycle, Region::FrontCenter, MotionTrend::Approaching)})};
  const std::vector<Observation> red{red_light_frame(0)};
  GuardConfig stat;
  stat.mode = GuardMode::PredicateStatic;
  GuardConfig targ;
  targ.mode = GuardMode::PredicateTargets;
  {
    ScriptedPolicy p(base, base);
    CHECK_FALSE(guard_step(cyclist, p, Window(4), stat, default_catalog()).record.delta);
  }
  {
    ScriptedPolicy p(base, base);
    CHECK(guard_step(red, p, Window(4), stat, default_catalog()).record.delta);
  }
  {
    ScriptedPolicy p(base, base);
    CHECK(guard_step(cyclist, p, Window(4), targ, default_catalog()).record.delta);
  }
  {
    ScriptedPolicy p(base, base);
    CHECK_FALSE(guard_step(red, p, Window(4), targ, default_catalog()).record.delta);
  }
  {
    // a persisted hazard in the window would be induced in Full mode
    Window w(4);
    w.push({0, {"C_STOP_OR_DECEL"}});
    w.push({1, {"C_STOP_OR_DECEL"}});
    const std::vector<Observation> empty{frame(2)};
    ScriptedPolicy p1(base, base), p2(base, base);
    CHECK(guard_step(empty, p1, w, GuardConfig{}, default_catalog()).record.delta);
    CHECK_FALSE(guard_step(empty, p2, w, stat, default_catalog()).record.delta);
  }
}

TEST_CASE("temporal induction keeps a hazard active after it disappears") {
  GuardSession session(GuardConfig{}, default_catalog());
  ScriptedPolicy policy(ActionDistribution::one_hot(Action::KeepSpeed), ActionDistribution::one_hot(Action::Decelerate));
  std::vector<Observation> frames;
  for (std::int64_t t = 0; t < 7; ++t) {
    frames.push_back(t < 3 ? frame(t, {participant("b", EntityKind::Bicycle, Region::FrontCenter, MotionTrend::Approaching)})
                           : frame(t));
  }
  std::vector<StepRecord> recs;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    recs.push_back(session.step(std::span<const Observation>(frames.data(), i + 1), policy));
  }
  CHECK(recs[3].z_now.active.empty());
  CHECK(recs[3].z_refined.active == ConstraintSet{"C_STOP_OR_DECEL"});
  CHECK(recs[3].delta);
  CHECK(recs[3].fired_rules == std::vector<std::string>{"T_persist", "T_count"});
  CHECK(*recs[3].prompt == "A hazard persisted over the last frames. A hazard was present in recent frames. "
                           "Only actions that stop or decelerate are allowed.");
  CHECK(recs[4].z_refined.active == ConstraintSet{"C_STOP_OR_DECEL"});
  CHECK(recs[5].z_refined.active == ConstraintSet{"C_STOP_OR_DECEL"});  // still 2 of the last 4
  CHECK(recs[6].z_refined.active.empty());
  // window discipline: instantaneous states, at most n
  CHECK(session.window().size() == 4);
  CHECK(session.window().at_lag(1)->t == 6);
}

TEST_CASE("step record invariants over random scenes") {
  testing::SplitMix64 rng(77);
  for (int mode_i = 0; mode_i < 6; ++mode_i) {
    GuardConfig cfg;
    cfg.mode = static_cast<GuardMode>(mode_i);
    GuardSession session(cfg, default_catalog());
    std::vector<Observation> frames;
    for (std::int64_t t = 0; t < 60; ++t) {
      std::vector<Entity> others;
      for (int i = 0; i < 3; ++i) {
        if (rng.uniform() < 0.5) {
          others.push_back(participant("e" + std::to_string(i), all_of<EntityKind>()[static_cast<std::size_t>(rng.range(1, 4))],
                                       all_of<Region>()[static_cast<std::size_t>(rng.range(0, 7))],
                                       all_of<MotionTrend>()[static_cast<std::size_t>(rng.range(0, 3))]));
        }
      }
      if (rng.uniform() < 0.3) others.push_back(testing::light("tl", SignalState::Red));
      frames.push_back(frame(t, others));
      ActionDistribution base;
      for (Action a : kAllActions) base[a] = rng.uniform();
      ActionDistribution prompted;
      for (Action a : kAllActions) prompted[a] = rng.uniform();
      ScriptedPolicy policy(base, prompted);
      const std::size_t begin = frames.size() > 3 ? frames.size() - 3 : 0;
      const StepRecord r =
          session.step(std::span<const Observation>(frames.data() + begin, frames.size() - begin), policy);
      CHECK(policy.calls <= 1 + cfg.max_retries);
      CHECK(session.window().size() <= cfg.n);
      if (!r.delta) {
        CHECK(r.final_action == r.base_action);
        CHECK_FALSE(r.prompt);
      } else {
        CHECK(r.effective_allowed.contains(r.final_action));
      }
      CHECK(std::includes(r.z_refined.active.begin(), r.z_refined.active.end(), r.z_now.active.begin(),
                          r.z_now.active.end()));
      CHECK(step_record_from_json(to_json(r)) == r);
    }
  }
}

TEST_CASE("determinism of guard_step") {
  const auto base = scores({{Action::KeepSpeed, 0.6}, {Action::Decelerate, 0.3}});
  const std::vector<Observation> hist{red_light_frame(0), red_light_frame(1)};
  Window w(4);
  w.push({0, {"C_STOP_OR_DECEL"}});
  ScriptedPolicy p1(base, base), p2(base, base);
  const auto a = guard_step(hist, p1, w, GuardConfig{}, default_catalog());
  const auto b = guard_step(hist, p2, w, GuardConfig{}, default_catalog());
  CHECK(a.record == b.record);
  CHECK(a.window == b.window);
  CHECK(to_json(a.record).dump() == to_json(b.record).dump());
}

TEST_CASE("config validation") {
  GuardConfig c;
  c.n = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.n = 1;
  c.max_retries = -1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_THROWS_AS(GuardSession(c, default_catalog()), ConfigError);
}

TEST_CASE("explain rendering") {
  ScriptedPolicy policy(ActionDistribution::one_hot(Action::KeepSpeed), ActionDistribution::one_hot(Action::Decelerate));
  const std::vector<Observation> red{red_light_frame(0)};
  const auto r = guard_step(red, policy, Window(4), GuardConfig{}, default_catalog());
  const std::string text = explain(r.record);
  CHECK(text.find("Red light detected. Only actions that stop or decelerate are allowed.") != std::string::npos);
  CHECK(text.find("RevisedByPrompt") != std::string::npos);
  CHECK(text.find("R_red") != std::string::npos);

  const std::vector<Observation> calm{frame(0)};
  ScriptedPolicy p2(ActionDistribution::one_hot(Action::KeepSpeed), ActionDistribution::one_hot(Action::Stop));
  const std::string quiet = explain(guard_step(calm, p2, Window(4), GuardConfig{}, default_catalog()).record);
  CHECK(quiet.find("Accepted") != std::string::npos);
  CHECK(quiet.find("prompt") == std::string::npos);
}

TEST_CASE("step record json errors") {
  CHECK_THROWS_AS(step_record_from_json(json::object()), SchemaError);
  json bad = to_json(StepRecord{});
  bad["final_action"] = "Fly";
  CHECK_THROWS_AS(step_record_from_json(bad), SchemaError);
}
