#pragma once

#include <stdexcept>
#include <string>

namespace exitrl {

// Error taxonomy used across the engine. Callers that want to distinguish
// bad config from bad data can catch the concrete type; everything derives
// from std::runtime_error so the CLI can catch one base.

// Invalid or inconsistent configuration (rejected at load time).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Structurally malformed input: mismatched lengths, gaps in histories.
class StructuralError : public std::runtime_error {
 public:
  explicit StructuralError(const std::string& what) : std::runtime_error(what) {}
};

// A value outside its mathematical domain (e.g. quality outside [0,1]).
class DomainError : public std::runtime_error {
 public:
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite intermediate detected during numeric work.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace exitrl
