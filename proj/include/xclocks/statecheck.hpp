#pragma once

// Executable oracles over run-time states: well-formedness and typability.

#include <string>
#include <vector>

#include "xclocks/runtime.hpp"

namespace xclocks {

enum class ViolationKind : std::uint8_t {
  RegisteredMismatch,
  QuiescentNotRegistered,
  DanglingView,
  PhaseLagViolation,
  OrphanChildren,
};

const char* to_string(ViolationKind k);

struct Violation {
  ViolationKind kind;
  std::string witness;
};

struct WellFormedReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
};

struct WellFormedOptions {
  /// Dangling views and phase lag are checked only when set.
  bool extended = true;
};

WellFormedReport check_wellformed(const State& s, WellFormedOptions options = {});

struct StateTyping {
  bool ok = false;
  std::string diagnostic;

  explicit operator bool() const { return ok; }
};

/// Types a state: each heap clock gets its own singleton type, each
/// activity's R comes from its view and its Q from the heap (an activity
/// whose view lags behind the global phase counts as resumed), and every
/// expression must end with no registered clocks. Includes well-formedness.
StateTyping typecheck_state(const State& s);

}  // namespace xclocks
