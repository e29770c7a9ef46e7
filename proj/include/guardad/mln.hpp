#pragma once

// n-th order Markovian logic induction over the recent constraint history.
//
// Each temporal rule k contributes w_k * f_k(window, candidate), where f_k is
// 1 when the rule body holds on the window and its head is in the candidate
// state ("firing" semantics). Every constraint the candidate adds beyond the
// instantaneous state costs an inclusion bias theta. The induced distribution
// is p(candidate | window) proportional to exp(potential).
//
// Only supersets of the instantaneous state, extended by heads of temporal
// rules, are candidates. Because a head's features never depend on other
// heads, the distribution factorizes per head and the MAP state is the
// instantaneous state plus every head whose supporting weight reaches theta.

#include <cstddef>
#include <deque>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "guardad/catalog.hpp"
#include "guardad/rules.hpp"

namespace guardad {

/// The last `order` safety states, oldest first. Shorter at episode start.
class Window {
 public:
  explicit Window(std::size_t order);

  /// Keeps only the most recent `order` states of `history` (oldest first).
  static Window from_history(std::span<const SafetyState> history, std::size_t order);

  std::size_t order() const { return order_; }
  std::size_t size() const { return states_.size(); }
  bool empty() const { return states_.empty(); }
  const std::deque<SafetyState>& states() const { return states_; }

  /// State `lag` steps back (lag 1 = newest), or nullptr outside the window.
  const SafetyState* at_lag(std::size_t lag) const;

  /// Appends the newest state and evicts the oldest beyond `order`. Step
  /// indices must be contiguous.
  void push(SafetyState state);

  bool operator==(const Window&) const = default;

 private:
  std::size_t order_;
  std::deque<SafetyState> states_;
};

/// Whether every body atom holds on the window. Atoms reaching past the
/// available history do not hold.
bool body_holds(const TemporalRule& rule, const Window& window);

/// f_k: 1 iff the body holds and the head is in `candidate`.
int feature_count(const TemporalRule& rule, const Window& window, const SafetyState& candidate);

/// sum_k w_k f_k - theta * |candidate \ z_now|. Throws CandidateNotSuperset.
double potential(const Window& window, const SafetyState& z_now, const SafetyState& candidate,
                 const RuleCatalog& catalog, double theta);

struct InductionResult {
  SafetyState refined;
  std::map<std::string, double> score;        // supporting weight per temporal head
  std::map<std::string, double> probability;  // inclusion marginal, 1 for z_now members
  std::vector<std::string> fired_rules;       // body held and head in refined, catalog order
};

/// MAP refinement: z_now plus every head with score >= theta.
InductionResult induce_state(const Window& window, const SafetyState& z_now, const RuleCatalog& catalog,
                             double theta);

inline constexpr std::size_t kMaxEnumeratedAdditions = 20;

/// Exact normalized distribution over candidate states (keyed by active set).
/// Throws TooManyCandidates beyond kMaxEnumeratedAdditions possible additions.
std::map<ConstraintSet, double> enumerate_distribution(const Window& window, const SafetyState& z_now,
                                                       const RuleCatalog& catalog, double theta);

/// Exhaustive argmax of `potential`; ties go to the larger set, then to the
/// lexicographically smallest id list. Testing oracle for induce_state.
SafetyState brute_force_map(const Window& window, const SafetyState& z_now, const RuleCatalog& catalog,
                            double theta);

/// Heads of temporal rules not already in z_now, sorted.
std::vector<std::string> candidate_additions(const SafetyState& z_now, const RuleCatalog& catalog);

double logistic(double x);

}  // namespace guardad
