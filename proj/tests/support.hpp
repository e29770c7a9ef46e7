#pragma once

#include <string>
#include <vector>

#include "guardad/catalog.hpp"
#include "guardad/guard.hpp"
#include "guardad/mln.hpp"
#include "guardad/policy.hpp"
#include "guardad/random.hpp"
#include "guardad/scene.hpp"

namespace testing {

using namespace guardad;

inline Entity ego() {
  Entity e;
  e.id = "ego";
  e.kind = EntityKind::Ego;
  e.motion = MotionTrend::Unknown;
  return e;
}

inline Entity participant(std::string id, EntityKind kind, Region region, MotionTrend motion) {
  Entity e;
  e.id = std::move(id);
  e.kind = kind;
  e.region = region;
  e.motion = motion;
  return e;
}

inline Entity light(std::string id, SignalState signal) {
  Entity e;
  e.id = std::move(id);
  e.kind = EntityKind::TrafficLight;
  e.region = Region::FrontCenter;
  e.motion = MotionTrend::Stationary;
  e.signal = signal;
  return e;
}

inline Observation frame(std::int64_t t, std::vector<Entity> others = {}) {
  Observation o;
  o.t = t;
  o.instruction = "Drive to the next intersection.";
  o.entities.push_back(ego());
  for (auto& e : others) o.entities.push_back(std::move(e));
  return o;
}

/// Returns fixed distributions: `base` without a prompt, `prompted` with one.
/// Counts calls and remembers the last prompt it saw.
class ScriptedPolicy : public Policy {
 public:
  ScriptedPolicy(ActionDistribution base, ActionDistribution prompted) : base_(base), prompted_(prompted) {}

  ActionDistribution decide(const PolicyRequest& request) override {
    ++calls;
    if (request.prompt_suffix) {
      last_prompt = *request.prompt_suffix;
      last_instruction = request.augmented_instruction();
      return prompted_;
    }
    return base_;
  }

  int calls = 0;
  std::string last_prompt;
  std::string last_instruction;

 private:
  ActionDistribution base_;
  ActionDistribution prompted_;
};

inline ActionDistribution scores(std::initializer_list<std::pair<Action, double>> entries) {
  ActionDistribution d;
  for (auto [a, s] : entries) d[a] = s;
  return d;
}

/// Random MLN instance: constraints C00..C(m-1), up to `max_rules` temporal
/// rules with weights in [-3, 3], a random window and instantaneous state.
struct MlnInstance {
  RuleCatalog catalog;
  Window window{1};
  SafetyState z_now;
  std::vector<SafetyState> history;  // full history the window was cut from
};

inline std::string cid(std::size_t i) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "C%02zu", i);
  return buf;
}

inline MlnInstance random_instance(SplitMix64& rng, std::size_t max_constraints = 12, std::size_t max_rules = 20,
                                   std::size_t extra_history = 0) {
  const auto m = static_cast<std::size_t>(rng.range(1, static_cast<std::int64_t>(max_constraints)));
  const auto order = static_cast<std::size_t>(rng.range(1, 6));
  std::vector<Constraint> constraints;
  for (std::size_t i = 0; i < m; ++i) constraints.push_back({cid(i), ActionSet{Action::Stop}, 1, "x"});

  std::vector<TemporalRule> rules;
  const auto nrules = static_cast<std::size_t>(rng.range(0, static_cast<std::int64_t>(max_rules)));
  for (std::size_t r = 0; r < nrules; ++r) {
    TemporalRule rule;
    rule.id = "T" + std::to_string(r);
    rule.weight = -3.0 + 6.0 * rng.uniform();
    rule.head = cid(static_cast<std::size_t>(rng.range(0, static_cast<std::int64_t>(m) - 1)));
    const auto atoms = rng.range(1, 3);
    for (std::int64_t a = 0; a < atoms; ++a) {
      const std::string c = cid(static_cast<std::size_t>(rng.range(0, static_cast<std::int64_t>(m) - 1)));
      if (rng.uniform() < 0.7) {
        rule.body.emplace_back(AtOffset{static_cast<int>(rng.range(1, static_cast<std::int64_t>(order))), c,
                                        rng.uniform() < 0.75});
      } else {
        const int last = static_cast<int>(rng.range(1, static_cast<std::int64_t>(order)));
        rule.body.emplace_back(CountAtLeast{c, static_cast<int>(rng.range(1, last)), last});
      }
    }
    rules.push_back(std::move(rule));
  }

  MlnInstance inst;
  inst.catalog = RuleCatalog({}, std::move(constraints), {}, std::move(rules));
  const auto len = static_cast<std::size_t>(rng.range(0, static_cast<std::int64_t>(order))) + extra_history;
  for (std::size_t t = 0; t < len; ++t) {
    SafetyState s;
    s.t = static_cast<std::int64_t>(t);
    for (std::size_t i = 0; i < m; ++i) {
      if (rng.uniform() < 0.45) s.active.insert(cid(i));
    }
    inst.history.push_back(std::move(s));
  }
  inst.window = Window::from_history(inst.history, order);
  inst.z_now.t = static_cast<std::int64_t>(len);
  for (std::size_t i = 0; i < m; ++i) {
    if (rng.uniform() < 0.3) inst.z_now.active.insert(cid(i));
  }
  return inst;
}

}  // namespace testing
