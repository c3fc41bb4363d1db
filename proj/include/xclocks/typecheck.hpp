#pragma once

// Singleton-type effect system.
//
// Judgements have the shape  Γ; R; Q ⊢ e : (τ, R', Q')  where R and Q are
// the singleton clock types the activity is registered with and has
// resumed, before and after evaluating e.

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "xclocks/syntax.hpp"

namespace xclocks {

struct SingletonId {
  std::uint32_t value = 0;

  friend auto operator<=>(const SingletonId&, const SingletonId&) = default;
};

std::string to_string(SingletonId id);  // "alpha<n>"

struct Type {
  enum class Kind : std::uint8_t { Unit, Clock };

  Kind kind = Kind::Unit;
  SingletonId alpha;  // meaningful only for Clock

  static Type unit() { return {}; }
  static Type clock(SingletonId a) { return {Kind::Clock, a}; }
  bool is_clock() const { return kind == Kind::Clock; }

  friend bool operator==(const Type& a, const Type& b) {
    return a.kind == b.kind && (a.kind == Kind::Unit || a.alpha == b.alpha);
  }
};

std::string to_string(const Type& t);

using Typing = std::map<Name, Type>;
using ClockSet = std::set<SingletonId>;

struct EffectResult {
  Type type;
  ClockSet reg;
  ClockSet quiesced;
};

enum class TypeErrorKind : std::uint8_t {
  UnboundName,
  NotAClock,
  ClockNotRegistered,
  AlreadyQuiescent,
  NotAllResumed,
  UndroppedClocks,
  ClockEscapesFinish,
  DuplicateClockArg,
  AsyncBodyLeak,
};

const char* to_string(TypeErrorKind k);

struct TypeErrorReport {
  TypeErrorKind kind;
  SourcePos location;
  std::string message;
};

class TypeError : public std::runtime_error {
 public:
  explicit TypeError(TypeErrorReport report);
  const TypeErrorReport& report() const { return report_; }

 private:
  TypeErrorReport report_;
};

/// The typing assumptions holding at one program point.
struct Annotation {
  enum class Point : std::uint8_t { Entry, Exit };

  SourcePos pos;
  Point point = Point::Exit;
  Typing gamma;
  ClockSet reg;
  ClockSet quiesced;
};

/// `{x:clock(alpha1)},{alpha1},emptyset`. Sequencing binders are hidden.
std::string render_assumptions(const Typing& gamma, const ClockSet& reg,
                               const ClockSet& quiesced);
/// `<line>:<col>  <assumptions>`
std::string render_annotation(const Annotation& a);

/// One checking run. Owns the fresh singleton counter, so ids are unique
/// within a run; also tracks activity names (a1, a2, ...) for diagnostics.
class Checker {
 public:
  explicit Checker(std::uint32_t first_fresh_id = 1) : next_id_(first_fresh_id) {}

  SingletonId fresh() { return SingletonId{next_id_++}; }

  /// Annotations are appended in evaluation order while checking.
  void record_annotations(std::vector<Annotation>* sink) { sink_ = sink; }

  /// Remembers a display name for a singleton type (used in messages).
  void name_clock(SingletonId id, const Name& name);

  Type type_of_value(const Typing& gamma, const ClockSet& reg, const Value& v,
                     SourcePos at = {});
  /// Async argument lists: each must be a registered clock, pairwise distinct.
  std::vector<SingletonId> type_of_clock_args(const Typing& gamma,
                                              const ClockSet& reg,
                                              const std::vector<Value>& args,
                                              SourcePos at = {});

  EffectResult check(const Typing& gamma, const ClockSet& reg,
                     const ClockSet& quiesced, const Expr& e);

  /// Clock names for the given ids, for diagnostics.
  std::string describe_clocks(const ClockSet& ids) const;
  const std::string& current_activity() const { return activities_.back(); }

 private:
  SingletonId require_clock(const Typing& gamma, const ClockSet& reg,
                            const Value& v, SourcePos at);
  [[noreturn]] void fail(TypeErrorKind kind, SourcePos at, std::string msg) const;
  void annotate(SourcePos pos, Annotation::Point point, const Typing& gamma,
                const ClockSet& reg, const ClockSet& quiesced);
  std::string value_name(const Value& v) const;

  std::uint32_t next_id_;
  std::uint32_t activity_counter_ = 1;
  std::vector<std::string> activities_{"a1"};
  std::vector<std::uint32_t> finish_floors_;
  std::map<SingletonId, Name> clock_names_;
  std::vector<Annotation>* sink_ = nullptr;
};

/// Types a value under Γ and the registered set (wf-c).
Type type_of_value(const Typing& gamma, const ClockSet& reg, const Value& v);

/// Checks `e` under (Γ, R, Q). Fresh ids are allocated above every id
/// mentioned in the inputs. Throws TypeError.
EffectResult check_expr(const Typing& gamma, const ClockSet& reg,
                        const ClockSet& quiesced, const Expr& e);

struct CheckOutcome {
  std::vector<Annotation> annotations;
  std::optional<EffectResult> result;
  std::optional<TypeErrorReport> error;

  bool ok() const { return !error.has_value(); }
};

/// Checks a whole program under (∅, ∅, ∅) and requires it to finish with
/// no registered clocks.
CheckOutcome check_program(const Expr& e);

}  // namespace xclocks
