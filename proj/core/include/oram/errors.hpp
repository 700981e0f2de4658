#pragma once

#include <stdexcept>
#include <string>

namespace oram {

// Bad flag/config combination detected before any simulation runs. CLI exit 1.
struct UsageError : std::runtime_error {
  explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

struct ConfigError : UsageError {
  explicit ConfigError(const std::string& what) : UsageError(what) {}
};

// The protocol reached a state it guarantees unreachable (stash overflow,
// touch of an exhausted bucket, double-selected slot). Not recoverable;
// CLI exit 2.
struct ProtocolViolation : std::runtime_error {
  explicit ProtocolViolation(const std::string& what) : std::runtime_error(what) {}
};

// No component of the simulated machine can make progress while work is
// still in flight. CLI exit 3.
struct DeadlockError : std::runtime_error {
  explicit DeadlockError(const std::string& what) : std::runtime_error(what) {}
};

struct TraceParseError : std::runtime_error {
  TraceParseError(const std::string& what, std::size_t line)
      : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line_number(line) {}
  std::size_t line_number;
};

struct InsufficientSamples : std::runtime_error {
  explicit InsufficientSamples(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace oram
