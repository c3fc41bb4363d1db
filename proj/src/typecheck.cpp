#include "xclocks/typecheck.hpp"

#include <algorithm>
#include <sstream>

namespace xclocks {

std::string to_string(SingletonId id) { return "alpha" + std::to_string(id.value); }

std::string to_string(const Type& t) {
  return t.is_clock() ? "clock(" + to_string(t.alpha) + ")" : "unit";
}

const char* to_string(TypeErrorKind k) {
  switch (k) {
    case TypeErrorKind::UnboundName: return "UnboundName";
    case TypeErrorKind::NotAClock: return "NotAClock";
    case TypeErrorKind::ClockNotRegistered: return "ClockNotRegistered";
    case TypeErrorKind::AlreadyQuiescent: return "AlreadyQuiescent";
    case TypeErrorKind::NotAllResumed: return "NotAllResumed";
    case TypeErrorKind::UndroppedClocks: return "UndroppedClocks";
    case TypeErrorKind::ClockEscapesFinish: return "ClockEscapesFinish";
    case TypeErrorKind::DuplicateClockArg: return "DuplicateClockArg";
    case TypeErrorKind::AsyncBodyLeak: return "AsyncBodyLeak";
  }
  return "?";
}

TypeError::TypeError(TypeErrorReport report)
    : std::runtime_error(report.message), report_(std::move(report)) {}

namespace {

std::string render_set(const ClockSet& s) {
  if (s.empty()) return "emptyset";
  std::string out = "{";
  bool first = true;
  for (auto id : s) {
    if (!first) out += ',';
    out += to_string(id);
    first = false;
  }
  return out + "}";
}

}  // namespace

std::string render_assumptions(const Typing& gamma, const ClockSet& reg,
                               const ClockSet& quiesced) {
  std::string g;
  for (const auto& [name, type] : gamma) {
    if (is_sequence_binder(name)) continue;
    g += g.empty() ? "{" : ",";
    g += name + ":" + to_string(type);
  }
  g = g.empty() ? "emptyset" : g + "}";
  return g + "," + render_set(reg) + "," + render_set(quiesced);
}

std::string render_annotation(const Annotation& a) {
  return std::to_string(a.pos.line) + ":" + std::to_string(a.pos.column) + "  " +
         render_assumptions(a.gamma, a.reg, a.quiesced);
}

void Checker::name_clock(SingletonId id, const Name& name) {
  if (!is_sequence_binder(name)) clock_names_.try_emplace(id, name);
}

std::string Checker::describe_clocks(const ClockSet& ids) const {
  std::string out;
  for (auto id : ids) {
    if (!out.empty()) out += ", ";
    auto it = clock_names_.find(id);
    out += it != clock_names_.end() ? it->second : to_string(id);
  }
  return out;
}

std::string Checker::value_name(const Value& v) const {
  return v.is_unit() ? "()" : v.name;
}

void Checker::fail(TypeErrorKind kind, SourcePos at, std::string msg) const {
  throw TypeError(TypeErrorReport{kind, at, std::move(msg)});
}

void Checker::annotate(SourcePos pos, Annotation::Point point,
                       const Typing& gamma, const ClockSet& reg,
                       const ClockSet& quiesced) {
  if (sink_ != nullptr) sink_->push_back(Annotation{pos, point, gamma, reg, quiesced});
}

SingletonId Checker::require_clock(const Typing& gamma, const ClockSet& reg,
                                   const Value& v, SourcePos at) {
  Type t = type_of_value(gamma, reg, v, at);
  if (!t.is_clock()) fail(TypeErrorKind::NotAClock, at, value_name(v) + " is not a clock");
  return t.alpha;
}

Type Checker::type_of_value(const Typing& gamma, const ClockSet& reg,
                            const Value& v, SourcePos at) {
  if (v.is_unit()) return Type::unit();
  auto it = gamma.find(v.name);
  if (it == gamma.end()) fail(TypeErrorKind::UnboundName, at, "unbound name " + v.name);
  const Type& t = it->second;
  if (t.is_clock() && !reg.contains(t.alpha)) {
    if (!finish_floors_.empty() && t.alpha.value < finish_floors_.back()) {
      fail(TypeErrorKind::ClockEscapesFinish, at,
           "clock " + v.name + " is not in scope of finish");
    }
    fail(TypeErrorKind::ClockNotRegistered, at,
         "clock " + v.name + " is not registered with activity " + current_activity());
  }
  return t;
}

std::vector<SingletonId> Checker::type_of_clock_args(const Typing& gamma,
                                                     const ClockSet& reg,
                                                     const std::vector<Value>& args,
                                                     SourcePos at) {
  std::vector<SingletonId> ids;
  for (const auto& v : args) {
    auto id = require_clock(gamma, reg, v, at);
    if (std::find(ids.begin(), ids.end(), id) != ids.end()) {
      fail(TypeErrorKind::DuplicateClockArg, at,
           "clock " + v.name + " passed twice to async");
    }
    ids.push_back(id);
  }
  return ids;
}

EffectResult Checker::check(const Typing& gamma, const ClockSet& reg,
                            const ClockSet& quiesced, const Expr& e) {
  using Point = Annotation::Point;

  if (auto* v = e.as<ValExpr>()) {
    Type t = type_of_value(gamma, reg, v->value, e.begin);
    annotate(e.begin, Point::Exit, gamma, reg, quiesced);
    return {t, reg, quiesced};
  }

  if (e.is<MakeClockExpr>()) {
    auto alpha = fresh();
    ClockSet r = reg;
    r.insert(alpha);
    annotate(e.begin, Point::Exit, gamma, r, quiesced);
    return {Type::clock(alpha), std::move(r), quiesced};
  }

  if (auto* res = e.as<ResumeExpr>()) {
    auto alpha = require_clock(gamma, reg, res->clock, e.begin);
    if (quiesced.contains(alpha)) {
      fail(TypeErrorKind::AlreadyQuiescent, e.begin,
           "clock " + value_name(res->clock) + " already quiescent for activity " +
               current_activity());
    }
    ClockSet q = quiesced;
    q.insert(alpha);
    annotate(e.begin, Point::Exit, gamma, reg, q);
    return {Type::unit(), reg, std::move(q)};
  }

  if (auto* drop = e.as<DropExpr>()) {
    auto alpha = require_clock(gamma, reg, drop->clock, e.begin);
    ClockSet r = reg;
    ClockSet q = quiesced;
    r.erase(alpha);
    q.erase(alpha);
    annotate(e.begin, Point::Exit, gamma, r, q);
    return {Type::unit(), std::move(r), std::move(q)};
  }

  if (e.is<NextExpr>()) {
    if (quiesced != reg) {
      ClockSet pending;
      std::set_difference(reg.begin(), reg.end(), quiesced.begin(), quiesced.end(),
                          std::inserter(pending, pending.end()));
      fail(TypeErrorKind::NotAllResumed, e.begin,
           "activity " + current_activity() + " did not resume " +
               describe_clocks(pending) + " before next");
    }
    annotate(e.begin, Point::Exit, gamma, reg, {});
    return {Type::unit(), reg, {}};
  }

  if (auto* async = e.as<AsyncExpr>()) {
    auto ids = type_of_clock_args(gamma, reg, async->clocks, e.begin);
    ClockSet body_reg(ids.begin(), ids.end());
    ClockSet body_q;
    std::set_intersection(quiesced.begin(), quiesced.end(), body_reg.begin(),
                          body_reg.end(), std::inserter(body_q, body_q.end()));

    activities_.push_back("a" + std::to_string(++activity_counter_));
    annotate(e.begin, Point::Entry, gamma, body_reg, body_q);
    auto body = check(gamma, body_reg, body_q, *async->body);
    if (!body.reg.empty()) {
      fail(TypeErrorKind::UndroppedClocks, e.end,
           "activity " + current_activity() + " did not drop " +
               describe_clocks(body.reg));
    }
    activities_.pop_back();
    annotate(e.end, Point::Exit, gamma, reg, quiesced);
    return {Type::unit(), reg, quiesced};
  }

  if (auto* fin = e.as<FinishExpr>()) {
    finish_floors_.push_back(next_id_);
    annotate(e.begin, Point::Entry, gamma, {}, {});
    auto body = check(gamma, {}, {}, *fin->body);
    if (!body.reg.empty()) {
      fail(TypeErrorKind::AsyncBodyLeak, e.end,
           "finish body did not drop " + describe_clocks(body.reg));
    }
    finish_floors_.pop_back();
    annotate(e.end, Point::Exit, gamma, reg, quiesced);
    return {body.type, reg, quiesced};
  }

  if (auto* let = e.as<LetExpr>()) {
    auto bound = check(gamma, reg, quiesced, *let->bound);
    Typing inner = gamma;
    inner.insert_or_assign(let->var, bound.type);
    if (bound.type.is_clock()) name_clock(bound.type.alpha, let->var);
    bool seq = is_sequence_binder(let->var);
    if (!seq) annotate(e.begin, Point::Entry, inner, bound.reg, bound.quiesced);
    auto result = check(inner, bound.reg, bound.quiesced, *let->body);
    if (!seq) annotate(e.end, Point::Exit, gamma, result.reg, result.quiesced);
    return result;
  }

  if (auto* join = e.as<JoinExpr>()) {
    auto it = gamma.find(join->label);
    if (it == gamma.end()) {
      fail(TypeErrorKind::UnboundName, e.begin, "unbound activity " + join->label);
    }
    return {it->second, reg, quiesced};
  }

  return {Type::unit(), reg, quiesced};
}

Type type_of_value(const Typing& gamma, const ClockSet& reg, const Value& v) {
  Checker c;
  return c.type_of_value(gamma, reg, v);
}

EffectResult check_expr(const Typing& gamma, const ClockSet& reg,
                        const ClockSet& quiesced, const Expr& e) {
  std::uint32_t top = 0;
  for (const auto& [_, t] : gamma) {
    if (t.is_clock()) top = std::max(top, t.alpha.value);
  }
  for (auto id : reg) top = std::max(top, id.value);
  for (auto id : quiesced) top = std::max(top, id.value);
  Checker c(top + 1);
  for (const auto& [name, t] : gamma) {
    if (t.is_clock()) c.name_clock(t.alpha, name);
  }
  return c.check(gamma, reg, quiesced, e);
}

CheckOutcome check_program(const Expr& e) {
  CheckOutcome out;
  Checker c;
  c.record_annotations(&out.annotations);
  try {
    auto r = c.check({}, {}, {}, e);
    if (!r.reg.empty()) {
      throw TypeError(TypeErrorReport{
          TypeErrorKind::UndroppedClocks, e.end,
          "activity " + c.current_activity() + " did not drop " +
              c.describe_clocks(r.reg)});
    }
    out.result = std::move(r);
  } catch (const TypeError& err) {
    out.error = err.report();
  }
  return out;
}

}  // namespace xclocks
