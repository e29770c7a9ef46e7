#pragma once

// Decision policies standing in for the driving model: anything that maps a
// short observation history (plus an optional prompt suffix) to scores over
// the action space.

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "guardad/scene.hpp"

namespace guardad {

struct PolicyRequest {
  std::span<const Observation> history;  // newest last, non-empty
  std::optional<std::string> prompt_suffix;

  /// Newest instruction with the prompt suffix appended.
  std::string augmented_instruction() const;
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual ActionDistribution decide(const PolicyRequest& request) = 0;
};

inline ActionDistribution decide(Policy& policy, const PolicyRequest& request) { return policy.decide(request); }

/// Ground truth a scripted policy plays from: the reference action per step
/// and the annotated hazard windows [onset, collision].
struct PolicyScript {
  std::vector<Action> reference;
  struct HazardWindow {
    std::int64_t onset = 0;
    std::int64_t collision = 0;
  };
  std::vector<HazardWindow> hazards;
  std::uint64_t scenario_seed = 0;
};

/// Emits the scripted reference action with score 1.
class OraclePolicy : public Policy {
 public:
  explicit OraclePolicy(PolicyScript script) : script_(std::move(script)) {}
  ActionDistribution decide(const PolicyRequest& request) override;

 private:
  PolicyScript script_;
};

/// Plays the reference except inside hazard windows, where each step it
/// misses the hazard with probability `blind_rate` and repeats the action it
/// took before the hazard began. Given a prompt suffix it complies with
/// probability `prompt_compliance`, switching to a cautious action. Draws are
/// a pure function of (seed, scenario seed, step), so re-queries at the same
/// step see the same blind draw.
class FaultyPolicy : public Policy {
 public:
  FaultyPolicy(PolicyScript script, double blind_rate, double prompt_compliance, std::uint64_t seed);
  ActionDistribution decide(const PolicyRequest& request) override;

  bool blind_at(std::int64_t t) const;
  bool complies_at(std::int64_t t) const;
  std::optional<PolicyScript::HazardWindow> hazard_at(std::int64_t t) const;

 private:
  Action reference_at(std::int64_t t) const;

  PolicyScript script_;
  double blind_rate_;
  double prompt_compliance_;
  std::uint64_t seed_;
};

enum class PolicyVariant { Oracle, Faulty, External };

/// Policy mini-syntax: `oracle`, `faulty:blind=0.7,comply=0.9,seed=1`,
/// `external:timeout_ms=5000,cmd=python3 client.py` (cmd takes the rest).
struct PolicySpec {
  PolicyVariant variant = PolicyVariant::Oracle;
  double blind_rate = 0.0;
  double prompt_compliance = 0.0;
  std::string command;
  std::uint64_t seed = 0;
  std::chrono::milliseconds timeout{5000};

  static PolicySpec parse(std::string_view text);  // throws ConfigError
  std::string to_string() const;
};

inline constexpr std::string_view kProtocolVersion = "1";

/// One child process per instance speaking the line-delimited JSON protocol
/// on its standard streams. Not thread-safe; bind to one session.
class ExternalPolicy : public Policy {
 public:
  ExternalPolicy(const std::string& command, std::chrono::milliseconds timeout);
  ~ExternalPolicy() override;
  ExternalPolicy(const ExternalPolicy&) = delete;
  ExternalPolicy& operator=(const ExternalPolicy&) = delete;

  /// Version token negotiated at construction.
  const std::string& version() const { return version_; }

  ActionDistribution decide(const PolicyRequest& request) override;

  /// Sends shutdown and reaps the child; returns its exit status.
  int shutdown();

 private:
  class Process;
  std::unique_ptr<Process> process_;
  std::string version_;
  std::chrono::milliseconds timeout_;
};

/// Launches `command`, negotiates the protocol and shuts the child down.
std::string external_handshake(const std::string& command,
                               std::chrono::milliseconds timeout = std::chrono::milliseconds{5000});

/// Parses and validates a `decision` reply line. Throws ProtocolError.
ActionDistribution parse_decision_reply(std::string_view line);

/// Builds the `decide` request line for `request`.
std::string decide_request_line(const PolicyRequest& request);

std::unique_ptr<Policy> make_policy(const PolicySpec& spec, const PolicyScript& script);

}  // namespace guardad
