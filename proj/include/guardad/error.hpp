#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace guardad {

/// Base of every error the engine raises. `code()` is a stable snake_case
/// token suitable for machine parsing (the CLI prints it verbatim).
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

// scene
class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& m) : Error("schema_error", m) {}
};
class DuplicateEntityId : public Error {
 public:
  explicit DuplicateEntityId(const std::string& m) : Error("duplicate_entity_id", m) {}
};
class NoEgo : public Error {
 public:
  explicit NoEgo(const std::string& m) : Error("no_ego", m) {}
};

// catalog
class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& m)
      : Error("parse_error",
              std::to_string(line) + ":" + std::to_string(column) + ": " + m),
        line_(line),
        column_(column) {}
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};
class UnknownReference : public Error {
 public:
  explicit UnknownReference(const std::string& m) : Error("unknown_reference", m) {}
};
class DuplicateId : public Error {
 public:
  explicit DuplicateId(const std::string& m) : Error("duplicate_id", m) {}
};
class EmptyAllowedSet : public Error {
 public:
  explicit EmptyAllowedSet(const std::string& m) : Error("empty_allowed_set", m) {}
};
class CatalogError : public Error {
 public:
  explicit CatalogError(const std::string& m) : Error("catalog_error", m) {}
};

// mln
class CandidateNotSuperset : public Error {
 public:
  explicit CandidateNotSuperset(const std::string& m) : Error("candidate_not_superset", m) {}
};
class TooManyCandidates : public Error {
 public:
  explicit TooManyCandidates(const std::string& m) : Error("too_many_candidates", m) {}
};
class WindowError : public Error {
 public:
  explicit WindowError(const std::string& m) : Error("window_error", m) {}
};

// guard
class EmptyViolationSet : public Error {
 public:
  explicit EmptyViolationSet(const std::string& m) : Error("empty_violation_set", m) {}
};
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& m) : Error("config_error", m) {}
};

// policy
class PolicyError : public Error {
 public:
  explicit PolicyError(const std::string& m) : Error("policy_error", m) {}

 protected:
  PolicyError(std::string code, const std::string& m) : Error(std::move(code), m) {}
};
class ProtocolError : public PolicyError {
 public:
  explicit ProtocolError(const std::string& m) : PolicyError("protocol_error", m) {}
};
class Timeout : public PolicyError {
 public:
  explicit Timeout(const std::string& m) : PolicyError("timeout", m) {}
};
class VersionMismatch : public PolicyError {
 public:
  explicit VersionMismatch(const std::string& m) : PolicyError("version_mismatch", m) {}
};
class LaunchError : public PolicyError {
 public:
  explicit LaunchError(const std::string& m) : PolicyError("launch_error", m) {}
};

// sim
class UnknownTemplate : public Error {
 public:
  explicit UnknownTemplate(const std::string& m) : Error("unknown_template", m) {}
};
class NoAccident : public Error {
 public:
  explicit NoAccident(const std::string& m) : Error("no_accident", m) {}
};
class EmptyInput : public Error {
 public:
  explicit EmptyInput(const std::string& m) : Error("empty_input", m) {}
};
class StepOutOfRange : public Error {
 public:
  explicit StepOutOfRange(const std::string& m) : Error("step_out_of_range", m) {}
};

}  // namespace guardad
