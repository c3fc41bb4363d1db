#pragma once

// Breadth-first exploration of every interleaving, deduplicating states up
// to renaming of machine-generated names.

#include <cstdint>
#include <string>
#include <vector>

#include "xclocks/runtime.hpp"

namespace xclocks {

/// Serialization of `s` with `l#`, `c#` and `x#` names replaced by
/// traversal-ordered indices; the fresh counter is left out.
std::string canonical_form(const State& s);

/// 64-bit digest of canonical_form.
std::uint64_t canonicalize(const State& s);

struct ExploreOptions {
  std::size_t max_states = 100000;
  std::size_t max_depth = 10000;
  /// Deadlocks beyond this many are counted but carry no trace.
  std::size_t max_deadlock_traces = 16;
};

struct ErrorWitness {
  RuntimeError error;
  Trace trace;
  State state;
};

struct DeadlockWitness {
  Trace trace;
  State state;
};

struct ExploreReport {
  std::size_t states_visited = 0;
  std::size_t transitions = 0;
  std::size_t error_states = 0;
  std::size_t deadlock_states = 0;
  /// First (hence shortest) witness per error kind.
  std::vector<ErrorWitness> errors;
  /// Shortest first.
  std::vector<DeadlockWitness> deadlocks;
  /// Canonical forms of the terminal states.
  std::vector<std::string> terminal_states;
  bool truncated = false;
  /// Distinct canonical forms that shared a digest.
  std::size_t digest_collisions = 0;

  bool clean() const { return error_states == 0 && deadlock_states == 0 && !truncated; }
};

ExploreReport explore(const State& initial, const ExploreOptions& options = {});
ExploreReport explore(const ExprPtr& program, const ExploreOptions& options = {});

/// Rebuilds a replayable trace by stepping `transitions` from `initial`.
Trace trace_from(const State& initial, const std::vector<Transition>& transitions);

}  // namespace xclocks
