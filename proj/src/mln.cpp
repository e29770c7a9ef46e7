#include "guardad/mln.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "guardad/error.hpp"

namespace guardad {

Window::Window(std::size_t order) : order_(order) {
  if (order_ == 0) throw ConfigError("window order must be >= 1");
}

Window Window::from_history(std::span<const SafetyState> history, std::size_t order) {
  Window w(order);
  const std::size_t skip = history.size() > order ? history.size() - order : 0;
  for (const SafetyState& s : history.subspan(skip)) w.push(s);
  return w;
}

const SafetyState* Window::at_lag(std::size_t lag) const {
  if (lag == 0 || lag > states_.size()) return nullptr;
  return &states_[states_.size() - lag];
}

void Window::push(SafetyState state) {
  if (!states_.empty() && state.t != states_.back().t + 1) {
    throw WindowError("window step " + std::to_string(state.t) + " does not follow " +
                      std::to_string(states_.back().t));
  }
  states_.push_back(std::move(state));
  while (states_.size() > order_) states_.pop_front();
}

namespace {

struct AtomHolds {
  const Window& window;

  bool operator()(const AtOffset& a) const {
    const SafetyState* s = window.at_lag(static_cast<std::size_t>(a.lag));
    if (!s) return false;
    return s->contains(a.constraint) == a.positive;
  }

  bool operator()(const CountAtLeast& c) const {
    const std::size_t span = std::min(static_cast<std::size_t>(c.last), window.size());
    int hits = 0;
    for (std::size_t lag = 1; lag <= span; ++lag) {
      if (window.at_lag(lag)->contains(c.constraint)) ++hits;
    }
    return hits >= c.at_least;
  }
};

}  // namespace

bool body_holds(const TemporalRule& rule, const Window& window) {
  return std::all_of(rule.body.begin(), rule.body.end(),
                     [&](const BodyAtom& atom) { return std::visit(AtomHolds{window}, atom); });
}

int feature_count(const TemporalRule& rule, const Window& window, const SafetyState& candidate) {
  return body_holds(rule, window) && candidate.contains(rule.head) ? 1 : 0;
}

double potential(const Window& window, const SafetyState& z_now, const SafetyState& candidate,
                 const RuleCatalog& catalog, double theta) {
  if (!std::includes(candidate.active.begin(), candidate.active.end(), z_now.active.begin(),
                     z_now.active.end())) {
    throw CandidateNotSuperset("candidate state drops constraints of the instantaneous state");
  }
  double psi = 0.0;
  for (const TemporalRule& rule : catalog.temporal_rules()) {
    psi += rule.weight * feature_count(rule, window, candidate);
  }
  const auto added = static_cast<double>(candidate.active.size() - z_now.active.size());
  return psi - theta * added;
}

double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::vector<std::string> candidate_additions(const SafetyState& z_now, const RuleCatalog& catalog) {
  std::set<std::string> heads;
  for (const TemporalRule& rule : catalog.temporal_rules()) {
    if (!z_now.contains(rule.head)) heads.insert(rule.head);
  }
  return {heads.begin(), heads.end()};
}

InductionResult induce_state(const Window& window, const SafetyState& z_now, const RuleCatalog& catalog,
                             double theta) {
  InductionResult out;
  const auto& rules = catalog.temporal_rules();
  std::vector<char> holds(rules.size());
  for (std::size_t k = 0; k < rules.size(); ++k) {
    holds[k] = body_holds(rules[k], window);
    double& s = out.score[rules[k].head];
    if (holds[k]) s += rules[k].weight;
  }

  out.refined = z_now;
  for (const std::string& id : z_now.active) out.probability[id] = 1.0;
  for (const auto& [head, s] : out.score) {
    if (z_now.contains(head)) continue;
    out.probability[head] = logistic(s - theta);
    if (s >= theta) out.refined.active.insert(head);
  }
  for (std::size_t k = 0; k < rules.size(); ++k) {
    if (holds[k] && out.refined.contains(rules[k].head)) out.fired_rules.push_back(rules[k].id);
  }
  return out;
}

namespace {

std::vector<std::string> additions_within_bound(const SafetyState& z_now, const RuleCatalog& catalog) {
  auto additions = candidate_additions(z_now, catalog);
  if (additions.size() > kMaxEnumeratedAdditions) {
    throw TooManyCandidates(std::to_string(additions.size()) + " candidate additions exceed the bound of " +
                            std::to_string(kMaxEnumeratedAdditions));
  }
  return additions;
}

SafetyState with_subset(const SafetyState& z_now, const std::vector<std::string>& additions,
                        std::uint32_t mask) {
  SafetyState s = z_now;
  for (std::size_t i = 0; i < additions.size(); ++i) {
    if (mask & (1u << i)) s.active.insert(additions[i]);
  }
  return s;
}

}  // namespace

std::map<ConstraintSet, double> enumerate_distribution(const Window& window, const SafetyState& z_now,
                                                       const RuleCatalog& catalog, double theta) {
  const auto additions = additions_within_bound(z_now, catalog);
  const std::uint32_t count = 1u << additions.size();
  std::vector<SafetyState> states;
  std::vector<double> psi;
  states.reserve(count);
  psi.reserve(count);
  double max_psi = -std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 0; mask < count; ++mask) {
    states.push_back(with_subset(z_now, additions, mask));
    psi.push_back(potential(window, z_now, states.back(), catalog, theta));
    max_psi = std::max(max_psi, psi.back());
  }
  double z = 0.0;
  for (double p : psi) z += std::exp(p - max_psi);
  std::map<ConstraintSet, double> out;
  for (std::uint32_t i = 0; i < count; ++i) out[states[i].active] = std::exp(psi[i] - max_psi) / z;
  return out;
}

SafetyState brute_force_map(const Window& window, const SafetyState& z_now, const RuleCatalog& catalog,
                            double theta) {
  const auto additions = additions_within_bound(z_now, catalog);
  const std::uint32_t count = 1u << additions.size();
  SafetyState best = z_now;
  double best_psi = potential(window, z_now, z_now, catalog, theta);
  for (std::uint32_t mask = 1; mask < count; ++mask) {
    SafetyState cand = with_subset(z_now, additions, mask);
    const double psi = potential(window, z_now, cand, catalog, theta);
    bool better = psi > best_psi;
    if (psi == best_psi) {
      if (cand.active.size() != best.active.size()) {
        better = cand.active.size() > best.active.size();
      } else {
        better = std::lexicographical_compare(cand.active.begin(), cand.active.end(), best.active.begin(),
                                              best.active.end());
      }
    }
    if (better) {
      best = std::move(cand);
      best_psi = psi;
    }
  }
  return best;
}

}  // namespace guardad
