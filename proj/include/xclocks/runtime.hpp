#pragma once

// Reference small-step semantics: heaps of clocks with registered and
// quiescent activity sets, activity trees with local clock views.

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "xclocks/activity_tree.hpp"
#include "xclocks/syntax.hpp"

namespace xclocks {

using Phase = std::uint64_t;

struct ClockValue {
  Phase phase = 0;
  std::set<Name> registered;
  std::set<Name> quiescent;

  friend bool operator==(const ClockValue&, const ClockValue&) = default;
};

using Heap = std::map<Name, ClockValue>;
using LocalView = std::map<Name, Phase>;
using Activity = BasicActivity<LocalView>;
using ActivitySet = BasicActivitySet<LocalView>;

struct State {
  Heap heap;
  ActivitySet activities;
  std::uint64_t fresh_counter = 0;
};

/// Exact equality, fresh names included.
bool identical(const State& a, const State& b);

enum class Rule : std::uint8_t { Async, Make, Resume, Next, Drop, Finish, Join, LetVal };

const char* to_string(Rule r);  // "R-async", ...
std::optional<Rule> rule_from_string(std::string_view s);

struct Transition {
  Path path;  // top-level label first, acting activity last
  Rule rule = Rule::LetVal;

  const Name& label() const { return path.back(); }
  friend bool operator==(const Transition&, const Transition&) = default;
};

std::string to_string(const Transition& t);

enum class RuntimeErrorKind : std::uint8_t { EAsync, EResume, EDrop, ENext1, ENext2, EAct };

const char* to_string(RuntimeErrorKind k);

struct RuntimeError {
  RuntimeErrorKind kind;
  Path path;
  std::optional<Name> clock;

  friend bool operator==(const RuntimeError&, const RuntimeError&) = default;
};

std::string to_string(const RuntimeError& e);

class IllegalTransition : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// `∅; {l#0 : (∅, let x#0 = e in (), ∅)}`
State load(const ExprPtr& program);

std::vector<Transition> enabled(const State& s);

/// Applies one enabled transition. Names allocated by the step (`c#n`,
/// `l#n`) are appended to `fresh` when given. Throws IllegalTransition.
State step(const State& s, const Transition& t, std::vector<Name>* fresh = nullptr);

/// First run-time error in pre-order, if any.
std::optional<RuntimeError> detect_error(const State& s);

bool is_terminal(const State& s);

/// Deterministic 64-bit digest of the heap, names included.
std::uint64_t heap_digest(const Heap& h);

std::string format_state(const State& s);

// ---------------------------------------------------------------------------
// Scheduling and runs

class Scheduler {
 public:
  virtual ~Scheduler() = default;
  virtual std::size_t choose(const State& s, std::span<const Transition> enabled) = 0;
};

/// Always the first enabled transition (lowest path order).
class FirstScheduler final : public Scheduler {
 public:
  std::size_t choose(const State&, std::span<const Transition>) override { return 0; }
};

/// Seeded uniform choice; reproducible for a given seed.
class RandomScheduler final : public Scheduler {
 public:
  explicit RandomScheduler(std::uint64_t seed) : rng_(seed) {}
  std::size_t choose(const State&, std::span<const Transition> enabled) override {
    return static_cast<std::size_t>(rng_() % enabled.size());
  }

 private:
  std::mt19937_64 rng_;
};

struct TraceStep {
  std::size_t index = 0;
  Transition transition;
  std::vector<Name> fresh;
  std::uint64_t heap_digest = 0;

  friend bool operator==(const TraceStep&, const TraceStep&) = default;
};

using Trace = std::vector<TraceStep>;

struct Finished {
  Value value;
};
struct Errored {
  RuntimeError error;
};
struct Deadlocked {};
struct StepLimitReached {};

using Verdict = std::variant<Finished, Errored, Deadlocked, StepLimitReached>;

std::string to_string(const Verdict& v);

struct RunResult {
  Verdict verdict;
  Trace trace;
  State final_state;
};

/// Called after each step with the pre-state, the transition and the
/// post-state.
using StepObserver = std::function<void(const State&, const Transition&, const State&)>;

/// Classifies a state without stepping: an error, a terminal value, or
/// stuck (no transitions). Returns nullopt when transitions remain.
std::optional<Verdict> classify_final(const State& s);

RunResult run(State s, Scheduler& scheduler, std::size_t max_steps,
              const StepObserver& observer = {});

class ReplayMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Re-applies a recorded trace; fresh names and heap digests must agree.
State replay(State s, const Trace& trace);

}  // namespace xclocks
