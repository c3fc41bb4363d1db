#pragma once

// Alternative clock representation: the heap keeps a phase and the sizes of
// the registered and quiescent sets; each local view entry keeps a phase and
// a resumed flag. Activity trees, expressions and transitions are shared
// with the set-based runtime.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "xclocks/runtime.hpp"

namespace xclocks {

struct ClockCounters {
  Phase phase = 0;
  std::uint32_t r = 0;
  std::uint32_t q = 0;

  friend bool operator==(const ClockCounters&, const ClockCounters&) = default;
};

/// `resumed` stays set while the local phase lags behind the global one:
/// the activity has already quiesced for the phase it is still in.
struct CounterViewEntry {
  Phase phase = 0;
  bool resumed = false;

  friend bool operator==(const CounterViewEntry&, const CounterViewEntry&) = default;
};

using CounterHeap = std::map<Name, ClockCounters>;
using CounterView = std::map<Name, CounterViewEntry>;
using CounterActivity = BasicActivity<CounterView>;
using CounterActivitySet = BasicActivitySet<CounterView>;

struct CounterState {
  CounterHeap heap;
  CounterActivitySet activities;
  std::uint64_t fresh_counter = 0;
};

bool operator==(const CounterState& a, const CounterState& b);

CounterState counter_load(const ExprPtr& program);
std::vector<Transition> counter_enabled(const CounterState& s);
std::optional<RuntimeError> counter_detect_error(const CounterState& s);
/// Throws IllegalTransition when `t` is not enabled.
CounterState counter_step(const CounterState& s, const Transition& t,
                          std::vector<Name>* fresh = nullptr);
std::optional<Verdict> counter_classify_final(const CounterState& s);

/// Clocks map to (phase, |R|, |Q|); a view entry is resumed when the
/// activity is in Q or its local phase is behind.
CounterState project(const State& s);

std::string format_counter_state(const CounterState& s);

struct LockstepResult {
  bool equal = true;
  std::size_t steps = 0;
  std::string divergence;
  std::optional<Verdict> verdict;
};

/// Drives both engines with the same transitions, chosen by `scheduler`
/// from the set engine's enabled list, comparing after every step.
LockstepResult lockstep_compare(const ExprPtr& program, Scheduler& scheduler,
                                std::size_t max_steps);

}  // namespace xclocks
