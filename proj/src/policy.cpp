#include "guardad/policy.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>

#include "guardad/error.hpp"
#include "guardad/random.hpp"

namespace guardad {

std::string PolicyRequest::augmented_instruction() const {
  std::string text = history.empty() ? std::string{} : history.back().instruction.value_or("");
  if (prompt_suffix && !prompt_suffix->empty()) {
    if (!text.empty()) text += ' ';
    text += *prompt_suffix;
  }
  return text;
}

namespace {

std::int64_t newest_step(const PolicyRequest& request) {
  if (request.history.empty()) throw PolicyError("policy request has an empty history");
  return request.history.back().t;
}

double unit_draw(std::uint64_t seed, std::uint64_t scenario_seed, std::int64_t t, std::uint64_t stream) {
  return unit_from_bits(hash_words({seed, scenario_seed, static_cast<std::uint64_t>(t), stream}));
}

constexpr std::uint64_t kBlindStream = 0xB1;
constexpr std::uint64_t kComplyStream = 0xC0;

}  // namespace

ActionDistribution OraclePolicy::decide(const PolicyRequest& request) {
  const std::int64_t t = newest_step(request);
  const Action a = t >= 0 && static_cast<std::size_t>(t) < script_.reference.size()
                       ? script_.reference[static_cast<std::size_t>(t)]
                       : Action::KeepSpeed;
  return ActionDistribution::one_hot(a);
}

FaultyPolicy::FaultyPolicy(PolicyScript script, double blind_rate, double prompt_compliance, std::uint64_t seed)
    : script_(std::move(script)), blind_rate_(blind_rate), prompt_compliance_(prompt_compliance), seed_(seed) {
  if (!(blind_rate_ >= 0.0 && blind_rate_ <= 1.0) || !(prompt_compliance_ >= 0.0 && prompt_compliance_ <= 1.0)) {
    throw ConfigError("faulty policy rates must lie in [0, 1]");
  }
}

Action FaultyPolicy::reference_at(std::int64_t t) const {
  if (t < 0 || static_cast<std::size_t>(t) >= script_.reference.size()) return Action::KeepSpeed;
  return script_.reference[static_cast<std::size_t>(t)];
}

std::optional<PolicyScript::HazardWindow> FaultyPolicy::hazard_at(std::int64_t t) const {
  for (const auto& h : script_.hazards) {
    if (t >= h.onset && t <= h.collision) return h;
  }
  return std::nullopt;
}

bool FaultyPolicy::blind_at(std::int64_t t) const {
  return unit_draw(seed_, script_.scenario_seed, t, kBlindStream) < blind_rate_;
}

bool FaultyPolicy::complies_at(std::int64_t t) const {
  return unit_draw(seed_, script_.scenario_seed, t, kComplyStream) < prompt_compliance_;
}

ActionDistribution FaultyPolicy::decide(const PolicyRequest& request) {
  const std::int64_t t = newest_step(request);
  const Action reference = reference_at(t);
  Action chosen = reference;
  if (auto hazard = hazard_at(t); hazard && blind_at(t)) {
    chosen = reference_at(hazard->onset - 1);
  }
  if (request.prompt_suffix && complies_at(t)) {
    chosen = (reference == Action::Stop || reference == Action::Decelerate) ? reference : Action::Decelerate;
  }

  ActionDistribution d;
  for (Action a : kAllActions) d[a] = 0.02;
  d[chosen] += 0.6;
  if (reference != chosen) d[reference] += 0.2;
  return d;
}

namespace {

double parse_rate(std::string_view key, std::string_view value) {
  std::string s(value);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw ConfigError("policy key '" + std::string(key) + "' expects a number");
  }
  if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("policy key '" + std::string(key) + "' must lie in [0, 1]");
  return v;
}

std::uint64_t parse_uint(std::string_view key, std::string_view value) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw ConfigError("policy key '" + std::string(key) + "' expects a non-negative integer");
  }
  return v;
}

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

PolicySpec PolicySpec::parse(std::string_view text) {
  PolicySpec spec;
  const auto colon = text.find(':');
  const std::string_view name = text.substr(0, colon);
  std::string_view rest = colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);

  if (name == "oracle") spec.variant = PolicyVariant::Oracle;
  else if (name == "faulty") spec.variant = PolicyVariant::Faulty;
  else if (name == "external") spec.variant = PolicyVariant::External;
  else throw ConfigError("unknown policy '" + std::string(name) + "'");

  while (!rest.empty()) {
    const auto eq = rest.find('=');
    if (eq == std::string_view::npos) throw ConfigError("policy option '" + std::string(rest) + "' lacks '='");
    const std::string_view key = rest.substr(0, eq);
    if (spec.variant == PolicyVariant::External && key == "cmd") {
      spec.command = std::string(rest.substr(eq + 1));
      break;
    }
    const auto comma = rest.find(',', eq);
    const std::string_view value = rest.substr(eq + 1, comma == std::string_view::npos ? rest.npos : comma - eq - 1);
    rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);

    if (key == "seed") spec.seed = parse_uint(key, value);
    else if (spec.variant == PolicyVariant::Faulty && (key == "blind" || key == "blind_rate")) spec.blind_rate = parse_rate(key, value);
    else if (spec.variant == PolicyVariant::Faulty && (key == "comply" || key == "prompt_compliance")) spec.prompt_compliance = parse_rate(key, value);
    else if (spec.variant == PolicyVariant::External && key == "timeout_ms") spec.timeout = std::chrono::milliseconds(parse_uint(key, value));
    else throw ConfigError("unknown option '" + std::string(key) + "' for policy '" + std::string(name) + "'");
  }
  if (spec.variant == PolicyVariant::External && spec.command.empty()) {
    throw ConfigError("external policy needs cmd=<command>");
  }
  return spec;
}

std::string PolicySpec::to_string() const {
  switch (variant) {
    case PolicyVariant::Oracle:
      return "oracle";
    case PolicyVariant::Faulty:
      return "faulty:blind=" + format_real(blind_rate) + ",comply=" + format_real(prompt_compliance) +
             ",seed=" + std::to_string(seed);
    case PolicyVariant::External:
      return "external:timeout_ms=" + std::to_string(timeout.count()) + ",cmd=" + command;
  }
  return {};
}

std::string decide_request_line(const PolicyRequest& request) {
  json history = json::array();
  for (const Observation& o : request.history) history.push_back(to_json(o));
  json msg;
  msg["type"] = "decide";
  msg["history"] = std::move(history);
  if (request.prompt_suffix) msg["prompt_suffix"] = *request.prompt_suffix;
  return msg.dump();
}

ActionDistribution parse_decision_reply(std::string_view line) {
  json msg;
  try {
    msg = json::parse(line);
  } catch (const json::parse_error&) {
    throw ProtocolError("reply is not valid JSON: '" + std::string(line.substr(0, 80)) + "'");
  }
  if (!msg.is_object() || !msg.contains("type") || !msg["type"].is_string()) {
    throw ProtocolError("reply lacks a string 'type'");
  }
  const std::string type = msg["type"].get<std::string>();
  if (type == "error") {
    throw ProtocolError("policy reported error: " + msg.value("reason", std::string("unspecified")));
  }
  if (type != "decision") throw ProtocolError("expected a decision reply, got '" + type + "'");
  if (!msg.contains("scores") || !msg["scores"].is_object()) throw ProtocolError("decision lacks 'scores'");
  const json& scores = msg["scores"];
  ActionDistribution d;
  for (Action a : kAllActions) {
    const std::string key(name_of(a));
    if (!scores.contains(key)) throw ProtocolError("decision is missing a score for " + key);
    if (!scores[key].is_number()) throw ProtocolError("score for " + key + " is not a number");
    d[a] = scores[key].get<double>();
  }
  if (scores.size() != kActionCount) throw ProtocolError("decision scores unknown actions");
  return d;
}

std::unique_ptr<Policy> make_policy(const PolicySpec& spec, const PolicyScript& script) {
  switch (spec.variant) {
    case PolicyVariant::Oracle:
      return std::make_unique<OraclePolicy>(script);
    case PolicyVariant::Faulty:
      return std::make_unique<FaultyPolicy>(script, spec.blind_rate, spec.prompt_compliance, spec.seed);
    case PolicyVariant::External:
      return std::make_unique<ExternalPolicy>(spec.command, spec.timeout);
  }
  throw ConfigError("unknown policy variant");
}

}  // namespace guardad
