#include "xclocks/syntax.hpp"

#include <cctype>
#include <sstream>
#include <utility>

namespace xclocks {

namespace {

template <class T>
ExprPtr node(T n) {
  return std::make_shared<const Expr>(Expr{ExprNode{std::move(n)}, {}, {}});
}

std::string join_expected(const std::vector<std::string>& expected) {
  std::string out;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (i > 0) out += (i + 1 == expected.size()) ? " or " : ", ";
    out += expected[i];
  }
  return out;
}

}  // namespace

ExprPtr make_val(Value v) { return node(ValExpr{std::move(v)}); }
ExprPtr make_let(Name var, ExprPtr bound, ExprPtr body) {
  return node(LetExpr{std::move(var), std::move(bound), std::move(body)});
}
ExprPtr make_make_clock() { return node(MakeClockExpr{}); }
ExprPtr make_async(std::vector<Value> clocks, ExprPtr body) {
  return node(AsyncExpr{std::move(clocks), std::move(body)});
}
ExprPtr make_resume(Value clock) { return node(ResumeExpr{std::move(clock)}); }
ExprPtr make_drop(Value clock) { return node(DropExpr{std::move(clock)}); }
ExprPtr make_next() { return node(NextExpr{}); }
ExprPtr make_finish(ExprPtr body) { return node(FinishExpr{std::move(body)}); }
ExprPtr make_join(Name label) { return node(JoinExpr{std::move(label)}); }

ExprPtr with_range(const ExprPtr& e, SourcePos begin, SourcePos end) {
  auto copy = std::make_shared<Expr>(*e);
  copy->begin = begin;
  copy->end = end;
  return copy;
}

bool is_value(const Expr& e) { return e.is<ValExpr>(); }

bool is_sequence_binder(std::string_view name) {
  return name.substr(0, 4) == "_seq";
}

bool is_machine_name(std::string_view name) {
  return name.find('#') != std::string_view::npos;
}

bool is_valid_identifier(std::string_view name) {
  if (name.empty()) return false;
  auto head = static_cast<unsigned char>(name.front());
  if (!std::isalpha(head) && head != '_') return false;
  for (char ch : name) {
    auto c = static_cast<unsigned char>(ch);
    if (!std::isalnum(c) && c != '_') return false;
  }
  return true;
}

SyntaxError::SyntaxError(SourcePos pos, std::vector<std::string> expected,
                         std::string found)
    : std::runtime_error(std::to_string(pos.line) + ":" +
                         std::to_string(pos.column) + ": syntax error: expected " +
                         join_expected(expected) + ", found " + found),
      pos_(pos),
      expected_(std::move(expected)),
      found_(std::move(found)) {}

ReservedNameError::ReservedNameError(SourcePos pos, std::string name)
    : std::runtime_error(std::to_string(pos.line) + ":" +
                         std::to_string(pos.column) + ": reserved name '" +
                         name + "' may not appear in source"),
      pos_(pos),
      name_(std::move(name)) {}

// ---------------------------------------------------------------------------
// Lexer

namespace {

enum class Tok {
  Ident,
  Let,
  In,
  MakeClock,
  Next,
  Resume,
  Drop,
  Async,
  Finish,
  LParen,
  RParen,
  LBracket,
  RBracket,
  Comma,
  Semi,
  Equals,
  Invalid,
  End,
};

struct Token {
  Tok kind;
  std::string text;
  SourcePos pos;
};

std::string describe(const Token& t) {
  if (t.kind == Tok::End) return "end of input";
  return "'" + t.text + "'";
}

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space_and_comments();
      SourcePos pos{line_, col_};
      if (at_end()) {
        out.push_back({Tok::End, "", pos});
        return out;
      }
      char c = peek();
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        out.push_back(identifier(pos));
        continue;
      }
      advance();
      switch (c) {
        case '(': out.push_back({Tok::LParen, "(", pos}); break;
        case ')': out.push_back({Tok::RParen, ")", pos}); break;
        case '[': out.push_back({Tok::LBracket, "[", pos}); break;
        case ']': out.push_back({Tok::RBracket, "]", pos}); break;
        case ',': out.push_back({Tok::Comma, ",", pos}); break;
        case ';': out.push_back({Tok::Semi, ";", pos}); break;
        case '=': out.push_back({Tok::Equals, "=", pos}); break;
        default: {
          std::string text(1, c);
          while (!at_end() && std::isalnum(static_cast<unsigned char>(peek()))) {
            text += peek();
            advance();
          }
          out.push_back({Tok::Invalid, text, pos});
        }
      }
    }
  }

 private:
  bool at_end() const { return i_ >= src_.size(); }
  char peek(std::size_t ahead = 0) const {
    return i_ + ahead < src_.size() ? src_[i_ + ahead] : '\0';
  }
  void advance() {
    if (src_[i_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++i_;
  }

  void skip_space_and_comments() {
    while (!at_end()) {
      char c = peek();
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else if (c == '/' && peek(1) == '/') {
        while (!at_end() && peek() != '\n') advance();
      } else {
        return;
      }
    }
  }

  Token identifier(SourcePos pos) {
    std::string text;
    while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) ||
                         peek() == '_')) {
      text += peek();
      advance();
    }
    if (peek() == '#') throw ReservedNameError(pos, text + "#");
    if (is_sequence_binder(text)) throw ReservedNameError(pos, text);
    static const std::pair<const char*, Tok> keywords[] = {
        {"let", Tok::Let},       {"in", Tok::In},
        {"makeClock", Tok::MakeClock}, {"next", Tok::Next},
        {"resume", Tok::Resume}, {"drop", Tok::Drop},
        {"async", Tok::Async},   {"finish", Tok::Finish},
    };
    for (const auto& [kw, kind] : keywords) {
      if (text == kw) return {kind, text, pos};
    }
    return {Tok::Ident, text, pos};
  }

  std::string_view src_;
  std::size_t i_ = 0;
  int line_ = 1;
  int col_ = 1;
};

// ---------------------------------------------------------------------------
// Parser

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  ExprPtr program() {
    auto e = expr();
    expect(Tok::End, "end of input");
    return e;
  }

 private:
  const Token& cur() const { return toks_[pos_]; }
  const Token& lookahead(std::size_t n) const {
    return toks_[std::min(pos_ + n, toks_.size() - 1)];
  }
  SourcePos last_end() const { return toks_[pos_ == 0 ? 0 : pos_ - 1].pos; }

  Token expect(Tok kind, const char* what) {
    if (cur().kind != kind) throw SyntaxError(cur().pos, {what}, describe(cur()));
    return toks_[pos_++];
  }

  // seq := bind (";" bind)*, desugared right-nested.
  ExprPtr expr() {
    std::vector<ExprPtr> items{bind()};
    while (cur().kind == Tok::Semi) {
      ++pos_;
      items.push_back(bind());
    }
    // Number binders left to right so numbering follows source order.
    std::vector<Name> binders;
    for (std::size_t i = 0; i + 1 < items.size(); ++i) {
      binders.push_back("_seq" + std::to_string(seq_counter_++));
    }
    ExprPtr acc = items.back();
    for (std::size_t i = items.size() - 1; i-- > 0;) {
      acc = with_range(make_let(binders[i], items[i], acc), items[i]->begin,
                       acc->end);
    }
    return acc;
  }

  ExprPtr bind() {
    if (cur().kind != Tok::Let) return simple();
    SourcePos begin = cur().pos;
    ++pos_;
    Token var = expect(Tok::Ident, "IDENT");
    expect(Tok::Equals, "'='");
    auto bound = bind();
    expect(Tok::In, "'in'");
    auto body = bind();
    return with_range(make_let(var.text, bound, body), begin, body->end);
  }

  Value ident_value() {
    Token t = expect(Tok::Ident, "IDENT");
    return Value::var(t.text);
  }

  ExprPtr simple() {
    const Token t = cur();
    switch (t.kind) {
      case Tok::LParen: {
        ++pos_;
        if (cur().kind == Tok::RParen) {
          ++pos_;
          return with_range(make_val(Value::unit()), t.pos, last_end());
        }
        auto inner = expr();
        Token close = expect(Tok::RParen, "')'");
        return with_range(inner, inner->begin, close.pos);
      }
      case Tok::Ident:
        ++pos_;
        return with_range(make_val(Value::var(t.text)), t.pos, t.pos);
      case Tok::MakeClock:
        ++pos_;
        return with_range(make_make_clock(), t.pos, t.pos);
      case Tok::Next:
        ++pos_;
        return with_range(make_next(), t.pos, t.pos);
      case Tok::Resume: {
        ++pos_;
        auto v = ident_value();
        return with_range(make_resume(v), t.pos, last_end());
      }
      case Tok::Drop: {
        ++pos_;
        auto v = ident_value();
        return with_range(make_drop(v), t.pos, last_end());
      }
      case Tok::Async: {
        ++pos_;
        expect(Tok::LBracket, "'['");
        std::vector<Value> clocks;
        if (cur().kind != Tok::RBracket) {
          clocks.push_back(ident_value());
          while (cur().kind == Tok::Comma) {
            ++pos_;
            clocks.push_back(ident_value());
          }
        }
        expect(Tok::RBracket, "']'");
        expect(Tok::LParen, "'('");
        auto body = expr();
        Token close = expect(Tok::RParen, "')'");
        return with_range(make_async(std::move(clocks), body), t.pos, close.pos);
      }
      case Tok::Finish: {
        ++pos_;
        expect(Tok::LParen, "'('");
        auto body = expr();
        Token close = expect(Tok::RParen, "')'");
        return with_range(make_finish(body), t.pos, close.pos);
      }
      default:
        throw SyntaxError(t.pos,
                          {"'let'", "'()'", "IDENT", "'makeClock'", "'next'",
                           "'resume'", "'drop'", "'async'", "'finish'", "'('"},
                          describe(t));
    }
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  int seq_counter_ = 0;
};

// ---------------------------------------------------------------------------
// Printer

enum class Level { Expr, Bind, Simple };

void print(std::ostream& os, const Expr& e, Level level);

void print_values(std::ostream& os, const std::vector<Value>& vs) {
  os << '[';
  for (std::size_t i = 0; i < vs.size(); ++i) {
    if (i > 0) os << ", ";
    os << format(vs[i]);
  }
  os << ']';
}

void print(std::ostream& os, const Expr& e, Level level) {
  if (auto* let = e.as<LetExpr>()) {
    bool seq = is_sequence_binder(let->var);
    bool needs_parens = seq ? level != Level::Expr : level == Level::Simple;
    if (needs_parens) os << '(';
    if (seq) {
      print(os, *let->bound, Level::Bind);
      os << "; ";
      print(os, *let->body, Level::Expr);
    } else {
      os << "let " << let->var << " = ";
      // Nested lets in bound position print parenthesised for readability.
      print(os, *let->bound, let->bound->is<LetExpr>() ? Level::Simple : Level::Bind);
      os << " in ";
      print(os, *let->body, Level::Bind);
    }
    if (needs_parens) os << ')';
    return;
  }
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, ValExpr>) {
          os << format(n.value);
        } else if constexpr (std::is_same_v<T, MakeClockExpr>) {
          os << "makeClock";
        } else if constexpr (std::is_same_v<T, NextExpr>) {
          os << "next";
        } else if constexpr (std::is_same_v<T, ResumeExpr>) {
          os << "resume " << format(n.clock);
        } else if constexpr (std::is_same_v<T, DropExpr>) {
          os << "drop " << format(n.clock);
        } else if constexpr (std::is_same_v<T, AsyncExpr>) {
          os << "async ";
          print_values(os, n.clocks);
          os << " (";
          print(os, *n.body, Level::Expr);
          os << ')';
        } else if constexpr (std::is_same_v<T, FinishExpr>) {
          os << "finish (";
          print(os, *n.body, Level::Expr);
          os << ')';
        } else if constexpr (std::is_same_v<T, JoinExpr>) {
          os << "join " << n.label;
        }
      },
      e.node);
}

bool values_equal(const Value& a, const Value& b) { return a == b; }

Name rename_away(const Name& base, const Expr& body, const Name& avoid) {
  Name candidate = base + "'";
  while (candidate == avoid || occurs_free(body, candidate)) candidate += "'";
  return candidate;
}

Value subst_value(const Value& v, const Name& x, const Value& with) {
  return (v.is_var() && v.name == x) ? with : v;
}

}  // namespace

ExprPtr parse(std::string_view source) {
  Parser p(Lexer(source).run());
  return p.program();
}

std::string format(const Value& v) {
  switch (v.kind) {
    case Value::Kind::Unit: return "()";
    case Value::Kind::Var: return v.name;
    case Value::Kind::ClockRef: return "clock " + v.name;
  }
  return {};
}

std::string format(const Expr& e) {
  std::ostringstream os;
  print(os, e, Level::Expr);
  return os.str();
}

bool structurally_equal(const Expr& a, const Expr& b) {
  if (a.node.index() != b.node.index()) return false;
  if (auto* la = a.as<LetExpr>()) {
    auto* lb = b.as<LetExpr>();
    bool binders_match = la->var == lb->var ||
                         (is_sequence_binder(la->var) && is_sequence_binder(lb->var));
    return binders_match && structurally_equal(*la->bound, *lb->bound) &&
           structurally_equal(*la->body, *lb->body);
  }
  if (auto* va = a.as<ValExpr>()) return values_equal(va->value, b.as<ValExpr>()->value);
  if (auto* ra = a.as<ResumeExpr>()) return ra->clock == b.as<ResumeExpr>()->clock;
  if (auto* da = a.as<DropExpr>()) return da->clock == b.as<DropExpr>()->clock;
  if (auto* ja = a.as<JoinExpr>()) return ja->label == b.as<JoinExpr>()->label;
  if (auto* fa = a.as<FinishExpr>()) {
    return structurally_equal(*fa->body, *b.as<FinishExpr>()->body);
  }
  if (auto* aa = a.as<AsyncExpr>()) {
    auto* ab = b.as<AsyncExpr>();
    return aa->clocks == ab->clocks && structurally_equal(*aa->body, *ab->body);
  }
  return true;  // MakeClock, Next
}

bool occurs_free(const Expr& e, const Name& x) {
  auto in_value = [&](const Value& v) { return v.is_var() && v.name == x; };
  if (auto* v = e.as<ValExpr>()) return in_value(v->value);
  if (auto* let = e.as<LetExpr>()) {
    return occurs_free(*let->bound, x) ||
           (let->var != x && occurs_free(*let->body, x));
  }
  if (auto* r = e.as<ResumeExpr>()) return in_value(r->clock);
  if (auto* d = e.as<DropExpr>()) return in_value(d->clock);
  if (auto* f = e.as<FinishExpr>()) return occurs_free(*f->body, x);
  if (auto* a = e.as<AsyncExpr>()) {
    for (const auto& c : a->clocks) {
      if (in_value(c)) return true;
    }
    return occurs_free(*a->body, x);
  }
  return false;
}

ExprPtr substitute(const ExprPtr& e, const Name& x, const Value& with) {
  auto rebuild = [&](ExprNode n) {
    return std::make_shared<const Expr>(Expr{std::move(n), e->begin, e->end});
  };
  if (!occurs_free(*e, x)) return e;

  if (auto* v = e->as<ValExpr>()) return rebuild(ValExpr{subst_value(v->value, x, with)});
  if (auto* r = e->as<ResumeExpr>()) return rebuild(ResumeExpr{subst_value(r->clock, x, with)});
  if (auto* d = e->as<DropExpr>()) return rebuild(DropExpr{subst_value(d->clock, x, with)});
  if (auto* f = e->as<FinishExpr>()) return rebuild(FinishExpr{substitute(f->body, x, with)});
  if (auto* a = e->as<AsyncExpr>()) {
    std::vector<Value> clocks;
    clocks.reserve(a->clocks.size());
    for (const auto& c : a->clocks) clocks.push_back(subst_value(c, x, with));
    return rebuild(AsyncExpr{std::move(clocks), substitute(a->body, x, with)});
  }
  if (auto* let = e->as<LetExpr>()) {
    auto bound = substitute(let->bound, x, with);
    if (let->var == x) return rebuild(LetExpr{let->var, bound, let->body});
    Name var = let->var;
    ExprPtr body = let->body;
    if (with.is_var() && with.name == var && occurs_free(*body, x)) {
      Name fresh = rename_away(var, *body, with.name);
      body = substitute(body, var, Value::var(fresh));
      var = fresh;
    }
    return rebuild(LetExpr{var, bound, substitute(body, x, with)});
  }
  return e;
}

}  // namespace xclocks
