#pragma once

// Abstract syntax, parser and pretty-printer for X10|clocks programs.
//
// Concrete grammar (`;` binds loosest, `let` bodies extend only over a
// single `bind`):
//
//   expr   := seq
//   seq    := bind (";" bind)*
//   bind   := "let" IDENT "=" bind "in" bind | simple
//   simple := "()" | IDENT | "makeClock" | "next" | "resume" IDENT
//           | "drop" IDENT | "async" "[" (IDENT ("," IDENT)*)? "]" "(" expr ")"
//           | "finish" "(" expr ")" | "(" expr ")"
//
// `e1; e2` is desugared to `let _seqN = e1 in e2`.

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace xclocks {

/// Variables, activity labels and clock names share one namespace.
using Name = std::string;

struct SourcePos {
  int line = 0;
  int column = 0;

  friend bool operator==(const SourcePos&, const SourcePos&) = default;
};

/// Values: `()`, a variable, or (at run time only) a heap clock.
struct Value {
  enum class Kind : std::uint8_t { Unit, Var, ClockRef };

  Kind kind = Kind::Unit;
  Name name;

  static Value unit() { return {}; }
  static Value var(Name n) { return {Kind::Var, std::move(n)}; }
  static Value clock(Name c) { return {Kind::ClockRef, std::move(c)}; }

  bool is_unit() const { return kind == Kind::Unit; }
  bool is_var() const { return kind == Kind::Var; }
  bool is_clock() const { return kind == Kind::ClockRef; }

  friend bool operator==(const Value&, const Value&) = default;
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct ValExpr {
  Value value;
};
struct LetExpr {
  Name var;
  ExprPtr bound;
  ExprPtr body;
};
struct MakeClockExpr {};
struct AsyncExpr {
  std::vector<Value> clocks;
  ExprPtr body;
};
struct ResumeExpr {
  Value clock;
};
struct DropExpr {
  Value clock;
};
struct NextExpr {};
struct FinishExpr {
  ExprPtr body;
};
/// Run-time only: the parent side of a pending finish.
struct JoinExpr {
  Name label;
};

using ExprNode = std::variant<ValExpr, LetExpr, MakeClockExpr, AsyncExpr,
                              ResumeExpr, DropExpr, NextExpr, FinishExpr,
                              JoinExpr>;

/// Immutable expression node. `begin`/`end` locate the first and last
/// token in the source; nodes built at run time carry zero positions.
struct Expr {
  ExprNode node;
  SourcePos begin;
  SourcePos end;

  template <class T>
  const T* as() const {
    return std::get_if<T>(&node);
  }
  template <class T>
  bool is() const {
    return std::holds_alternative<T>(node);
  }
};

// Construction helpers. Positions default to zero.
ExprPtr make_val(Value v);
ExprPtr make_let(Name var, ExprPtr bound, ExprPtr body);
ExprPtr make_make_clock();
ExprPtr make_async(std::vector<Value> clocks, ExprPtr body);
ExprPtr make_resume(Value clock);
ExprPtr make_drop(Value clock);
ExprPtr make_next();
ExprPtr make_finish(ExprPtr body);
ExprPtr make_join(Name label);

/// Returns a copy of `e` with a new source range.
ExprPtr with_range(const ExprPtr& e, SourcePos begin, SourcePos end);

bool is_value(const Expr& e);

/// Machine-generated names (`l#n`, `c#n`, `x#n`) and sequencing binders
/// (`_seqN`) are reserved; the parser rejects them in source text.
bool is_sequence_binder(std::string_view name);
bool is_machine_name(std::string_view name);
bool is_valid_identifier(std::string_view name);

class SyntaxError : public std::runtime_error {
 public:
  SyntaxError(SourcePos pos, std::vector<std::string> expected,
              std::string found);

  SourcePos pos() const { return pos_; }
  const std::vector<std::string>& expected() const { return expected_; }
  const std::string& found() const { return found_; }

 private:
  SourcePos pos_;
  std::vector<std::string> expected_;
  std::string found_;
};

class ReservedNameError : public std::runtime_error {
 public:
  ReservedNameError(SourcePos pos, std::string name);

  SourcePos pos() const { return pos_; }
  const std::string& name() const { return name_; }

 private:
  SourcePos pos_;
  std::string name_;
};

/// Parses and desugars a program. Throws SyntaxError or ReservedNameError.
ExprPtr parse(std::string_view source);

/// Deterministic pretty-printer. Sequencing lets print as `e1; e2`;
/// run-time forms print as `clock <c>` and `join <l>`.
std::string format(const Expr& e);
std::string format(const Value& v);

/// Structural equality ignoring source positions; binders named `_seq*`
/// compare equal to each other regardless of their numbering.
bool structurally_equal(const Expr& a, const Expr& b);

/// Capture-avoiding substitution `e[v/x]`.
ExprPtr substitute(const ExprPtr& e, const Name& x, const Value& v);

bool occurs_free(const Expr& e, const Name& x);

}  // namespace xclocks
