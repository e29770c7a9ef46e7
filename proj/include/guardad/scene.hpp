#pragma once

// Symbolic scene and action model: what the perception stack is assumed to
// emit for one frame, plus the closed action space of the driving policy.

#include <array>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace guardad {

using json = nlohmann::json;

enum class EntityKind { Ego, Vehicle, Pedestrian, Bicycle, Motorcycle, TrafficLight, TrafficSign, Other };
enum class Region { FrontLeft, FrontCenter, FrontRight, Left, Right, RearLeft, RearCenter, RearRight };
enum class MotionTrend { Approaching, Receding, Crossing, Stationary, Unknown };
enum class SignalState { Red, Yellow, Green, None };
// Which sign a TrafficSign entity shows. None for every other kind.
enum class SignType { Stop, Yield, None };
enum class DistanceBand { Near, Mid, Far };

/// Declaration order is the argmax tie-break order.
enum class Action : std::uint8_t {
  Stop,
  Decelerate,
  KeepSpeed,
  Accelerate,
  TurnLeft,
  TurnRight,
  LaneChangeLeft,
  LaneChangeRight,
};

inline constexpr std::size_t kActionCount = 8;
inline constexpr std::array<Action, kActionCount> kAllActions = {
    Action::Stop,     Action::Decelerate, Action::KeepSpeed,      Action::Accelerate,
    Action::TurnLeft, Action::TurnRight,  Action::LaneChangeLeft, Action::LaneChangeRight,
};

template <class E>
struct EnumNames;

#define GUARDAD_ENUM_NAMES(E, ...)                                      \
  template <>                                                           \
  struct EnumNames<E> {                                                 \
    static constexpr std::array names = {__VA_ARGS__};                  \
  }

GUARDAD_ENUM_NAMES(EntityKind, std::string_view{"Ego"}, std::string_view{"Vehicle"},
                   std::string_view{"Pedestrian"}, std::string_view{"Bicycle"},
                   std::string_view{"Motorcycle"}, std::string_view{"TrafficLight"},
                   std::string_view{"TrafficSign"}, std::string_view{"Other"});
GUARDAD_ENUM_NAMES(Region, std::string_view{"FrontLeft"}, std::string_view{"FrontCenter"},
                   std::string_view{"FrontRight"}, std::string_view{"Left"},
                   std::string_view{"Right"}, std::string_view{"RearLeft"},
                   std::string_view{"RearCenter"}, std::string_view{"RearRight"});
GUARDAD_ENUM_NAMES(MotionTrend, std::string_view{"Approaching"}, std::string_view{"Receding"},
                   std::string_view{"Crossing"}, std::string_view{"Stationary"},
                   std::string_view{"Unknown"});
GUARDAD_ENUM_NAMES(SignalState, std::string_view{"Red"}, std::string_view{"Yellow"},
                   std::string_view{"Green"}, std::string_view{"None"});
GUARDAD_ENUM_NAMES(SignType, std::string_view{"Stop"}, std::string_view{"Yield"},
                   std::string_view{"None"});
GUARDAD_ENUM_NAMES(DistanceBand, std::string_view{"Near"}, std::string_view{"Mid"},
                   std::string_view{"Far"});
GUARDAD_ENUM_NAMES(Action, std::string_view{"Stop"}, std::string_view{"Decelerate"},
                   std::string_view{"KeepSpeed"}, std::string_view{"Accelerate"},
                   std::string_view{"TurnLeft"}, std::string_view{"TurnRight"},
                   std::string_view{"LaneChangeLeft"}, std::string_view{"LaneChangeRight"});

#undef GUARDAD_ENUM_NAMES

template <class E>
constexpr std::string_view name_of(E value) {
  return EnumNames<E>::names[static_cast<std::size_t>(value)];
}

template <class E>
constexpr std::optional<E> enum_from(std::string_view token) {
  const auto& names = EnumNames<E>::names;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == token) return static_cast<E>(i);
  }
  return std::nullopt;
}

template <class E>
constexpr auto all_of() {
  std::array<E, EnumNames<E>::names.size()> out{};
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<E>(i);
  return out;
}

/// Small value set over the eight actions.
class ActionSet {
 public:
  constexpr ActionSet() = default;
  constexpr ActionSet(std::initializer_list<Action> actions) {
    for (Action a : actions) insert(a);
  }

  static constexpr ActionSet all() {
    ActionSet s;
    s.bits_ = 0xFF;
    return s;
  }
  static constexpr ActionSet from_bits(std::uint8_t bits) {
    ActionSet s;
    s.bits_ = bits;
    return s;
  }

  constexpr bool contains(Action a) const { return (bits_ >> static_cast<unsigned>(a)) & 1u; }
  constexpr void insert(Action a) { bits_ |= static_cast<std::uint8_t>(1u << static_cast<unsigned>(a)); }
  constexpr void erase(Action a) { bits_ &= static_cast<std::uint8_t>(~(1u << static_cast<unsigned>(a))); }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr std::size_t size() const {
    std::size_t n = 0;
    for (std::uint8_t b = bits_; b != 0; b &= static_cast<std::uint8_t>(b - 1)) ++n;
    return n;
  }
  constexpr std::uint8_t bits() const { return bits_; }
  constexpr bool is_subset_of(ActionSet other) const { return (bits_ & ~other.bits_) == 0; }

  constexpr ActionSet operator&(ActionSet other) const { return from_bits(bits_ & other.bits_); }
  constexpr ActionSet operator|(ActionSet other) const { return from_bits(bits_ | other.bits_); }
  constexpr bool operator==(const ActionSet&) const = default;

  /// Members in declaration order.
  std::vector<Action> to_vector() const;

 private:
  std::uint8_t bits_ = 0;
};

/// "{Stop, Decelerate}" in declaration order.
std::string to_string(ActionSet set);

/// Per-action scores emitted by a policy. Every action always carries a score.
class ActionDistribution {
 public:
  ActionDistribution() = default;

  static ActionDistribution one_hot(Action top, double score = 1.0) {
    ActionDistribution d;
    d[top] = score;
    return d;
  }

  double& operator[](Action a) { return scores_[static_cast<std::size_t>(a)]; }
  double operator[](Action a) const { return scores_[static_cast<std::size_t>(a)]; }
  const std::array<double, kActionCount>& scores() const { return scores_; }

  bool operator==(const ActionDistribution&) const = default;

 private:
  std::array<double, kActionCount> scores_{};
};

/// Maximizing action; ties go to the earliest action in declaration order.
Action argmax_action(const ActionDistribution& dist);

/// Argmax restricted to `allowed`; nullopt when `allowed` is empty.
std::optional<Action> argmax_action(const ActionDistribution& dist, ActionSet allowed);

struct Entity {
  std::string id;
  EntityKind kind = EntityKind::Other;
  std::optional<Region> region;  // absent for Ego
  MotionTrend motion = MotionTrend::Unknown;
  SignalState signal = SignalState::None;
  SignType sign = SignType::None;
  DistanceBand distance_band = DistanceBand::Mid;
  bool visible = true;

  bool operator==(const Entity&) const = default;
};

struct Observation {
  std::int64_t t = 0;
  std::vector<Entity> entities;  // Ego first
  std::optional<std::string> instruction;

  const Entity& ego() const { return entities.front(); }
  const Entity* find(std::string_view id) const;

  bool operator==(const Observation&) const = default;
};

/// Throws SchemaError, DuplicateEntityId or NoEgo when an invariant fails.
void validate_observation(const Observation& obs);

/// Parses one frame object. Defaults: distance_band=Mid, visible=true,
/// signal/sign=None. An Ego listed later in the array is moved to the front.
Observation parse_observation(const json& record);
Observation parse_observation(std::string_view line);
inline Observation parse_observation(const std::string& line) { return parse_observation(std::string_view(line)); }
inline Observation parse_observation(const char* line) { return parse_observation(std::string_view(line)); }

json to_json(const Observation& obs);
/// Compact single-line form used in traces and the wire protocol.
std::string serialize(const Observation& obs);

}  // namespace guardad
