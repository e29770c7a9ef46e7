#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "guardad/error.hpp"
#include "guardad/sim.hpp"

namespace guardad {

EpisodeResult run_episode(const Scenario& scenario, Policy& policy, const GuardConfig& config,
                          const RuleCatalog& catalog, const EpisodeOptions& options) {
  auto [frames, dropped] = perceived_steps(scenario);
  GuardSession session(config, catalog);
  EpisodeResult result;
  result.trace.scenario_id = scenario.id;
  const auto history_len = static_cast<std::ptrdiff_t>(config.k) + 1;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const std::ptrdiff_t end = static_cast<std::ptrdiff_t>(i) + 1;
    const std::ptrdiff_t begin = std::max<std::ptrdiff_t>(0, end - history_len);
    std::span<const Observation> history(frames.data() + begin, static_cast<std::size_t>(end - begin));
    try {
      StepRecord rec = session.step(history, policy);
      rec.dropped = std::move(dropped[i]);
      result.trace.steps.push_back(std::move(rec));
    } catch (const PolicyError& e) {
      result.trace.abort_reason = std::string(e.code()) + ": " + e.what();
      result.trace.abort_step = frames[i].t;
      break;
    }
  }
  result.outcome = evaluate_episode(result.trace, scenario, options);
  return result;
}

EpisodeResult run_episode(const Scenario& scenario, const PolicySpec& spec, const GuardConfig& config,
                          const RuleCatalog& catalog, const EpisodeOptions& options) {
  std::unique_ptr<Policy> policy;
  try {
    policy = make_policy(spec, scenario.script());
  } catch (const PolicyError& e) {
    EpisodeResult result;
    result.trace.scenario_id = scenario.id;
    result.trace.abort_reason = std::string(e.code()) + ": " + e.what();
    result.trace.abort_step = 0;
    result.outcome = evaluate_episode(result.trace, scenario, options);
    return result;
  }
  return run_episode(scenario, *policy, config, catalog, options);
}

namespace {

const StepRecord* record_at(const EpisodeTrace& trace, std::int64_t t) {
  for (const StepRecord& r : trace.steps) {
    if (r.t == t) return &r;
  }
  return nullptr;
}

const Entity* truth_entity(const Scenario& s, std::int64_t t, const std::string& id) {
  if (t < 0 || t >= static_cast<std::int64_t>(s.steps.size())) return nullptr;
  return s.steps[static_cast<std::size_t>(t)].find(id);
}

bool in_hazard_window(const Scenario& s, std::int64_t t) {
  return std::any_of(s.hazards.begin(), s.hazards.end(),
                     [t](const Hazard& h) { return t >= h.onset && t <= h.collision; });
}

}  // namespace

std::vector<bool> accident_oracle(const EpisodeTrace& trace, const Scenario& scenario, std::int64_t r) {
  if (r < 1) throw ConfigError("reaction window must be >= 1 step");
  std::vector<bool> out;
  for (const Hazard& h : scenario.hazards) {
    bool avoided = false;
    for (std::int64_t t = h.collision - r; t <= h.collision && !avoided; ++t) {
      const StepRecord* rec = record_at(trace, t);
      avoided = rec && h.safe_set.contains(rec->final_action);
    }
    out.push_back(!avoided);
  }
  return out;
}

FailureType classify_failure(const EpisodeTrace& trace, const Scenario& scenario, const EpisodeOptions& options) {
  if (trace.abort_reason) return FailureType::OT;
  const std::vector<bool> hit = accident_oracle(trace, scenario, options.reaction_steps);
  std::vector<const Hazard*> accidents;
  for (std::size_t i = 0; i < hit.size(); ++i) {
    if (hit[i]) accidents.push_back(&scenario.hazards[i]);
  }
  if (accidents.empty()) throw NoAccident("episode '" + trace.scenario_id + "' had no accident");

  for (const Hazard* h : accidents) {
    for (std::int64_t t = h->collision - options.reaction_steps; t <= h->collision; ++t) {
      const StepRecord* rec = record_at(trace, t);
      if (rec && std::find(rec->dropped.begin(), rec->dropped.end(), h->trigger) != rec->dropped.end()) {
        return FailureType::OT;
      }
    }
  }
  for (const Hazard* h : accidents) {
    const StepRecord* rec = record_at(trace, h->collision);
    if (rec && rec->signal_violation) return FailureType::RV;
  }
  for (const Hazard* h : accidents) {
    for (std::int64_t t = std::max<std::int64_t>(1, h->collision - options.lookback); t <= h->collision; ++t) {
      const Entity* now = truth_entity(scenario, t, h->trigger);
      if (!now) continue;
      const Entity* before = truth_entity(scenario, t - 1, h->trigger);
      if (!before || before->motion != now->motion) return FailureType::RP;
    }
  }
  return FailureType::EDE;
}

EpisodeOutcome evaluate_episode(const EpisodeTrace& trace, const Scenario& scenario, const EpisodeOptions& options) {
  EpisodeOutcome o;
  o.steps = scenario.steps.size();
  for (const StepRecord& r : trace.steps) {
    if (r.delta) {
      ++o.interventions;
      if (!in_hazard_window(scenario, r.t)) ++o.false_interventions;
    }
    if (r.t >= 0 && r.t < static_cast<std::int64_t>(scenario.reference_actions.size()) &&
        r.final_action == scenario.reference_actions[static_cast<std::size_t>(r.t)]) {
      ++o.task_matches;
    }
  }
  o.hazard_accidents = accident_oracle(trace, scenario, options.reaction_steps);
  for (const Hazard& h : scenario.hazards) {
    bool covered = false;
    for (const StepRecord& r : trace.steps) {
      if (r.t < h.collision - options.reaction_steps || r.t > h.collision) continue;
      covered = covered || std::any_of(r.firings.begin(), r.firings.end(),
                                       [&](const HornFiring& f) { return f.entity == h.trigger; });
    }
    o.hazard_covered.push_back(covered);
  }

  std::optional<std::int64_t> first;
  for (std::size_t i = 0; i < scenario.hazards.size(); ++i) {
    if (o.hazard_accidents[i] && (!first || scenario.hazards[i].collision < *first)) first = scenario.hazards[i].collision;
  }
  if (trace.abort_step && (!first || *trace.abort_step < *first)) first = trace.abort_step;
  o.accident = first.has_value();
  o.accident_step = first;
  if (o.accident) o.failure_type = classify_failure(trace, scenario, options);
  return o;
}

std::vector<EpisodeResult> run_suite(const std::vector<Scenario>& scenarios, const PolicySpec& policy,
                                     const GuardConfig& config, const RuleCatalog& catalog, unsigned jobs,
                                     const EpisodeOptions& options) {
  config.validate();
  std::vector<EpisodeResult> results(scenarios.size());
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(1, scenarios.size())));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < scenarios.size(); i = next++) {
      try {
        results[i] = run_episode(scenarios[i], policy, config, catalog, options);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = scenarios.size();
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

}  // namespace guardad
