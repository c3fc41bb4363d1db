#include "xclocks/runtime.hpp"

#include <algorithm>
#include <sstream>

#include "xclocks/digest.hpp"

namespace xclocks {

std::string format_path(std::span<const Name> path) {
  std::string out;
  for (const auto& l : path) {
    if (!out.empty()) out += '/';
    out += l;
  }
  return out;
}

const char* to_string(Rule r) {
  switch (r) {
    case Rule::Async: return "R-async";
    case Rule::Make: return "R-make";
    case Rule::Resume: return "R-resume";
    case Rule::Next: return "R-next";
    case Rule::Drop: return "R-drop";
    case Rule::Finish: return "R-finish";
    case Rule::Join: return "R-join";
    case Rule::LetVal: return "R-let-val";
  }
  return "?";
}

std::optional<Rule> rule_from_string(std::string_view s) {
  for (auto r : {Rule::Async, Rule::Make, Rule::Resume, Rule::Next, Rule::Drop,
                 Rule::Finish, Rule::Join, Rule::LetVal}) {
    if (s == to_string(r)) return r;
  }
  return std::nullopt;
}

std::string to_string(const Transition& t) {
  return format_path(t.path) + " " + to_string(t.rule);
}

const char* to_string(RuntimeErrorKind k) {
  switch (k) {
    case RuntimeErrorKind::EAsync: return "E-async";
    case RuntimeErrorKind::EResume: return "E-resume";
    case RuntimeErrorKind::EDrop: return "E-drop";
    case RuntimeErrorKind::ENext1: return "E-next1";
    case RuntimeErrorKind::ENext2: return "E-next2";
    case RuntimeErrorKind::EAct: return "E-act";
  }
  return "?";
}

std::string to_string(const RuntimeError& e) {
  std::string out = std::string(to_string(e.kind)) + " at " + format_path(e.path);
  if (e.clock) out += " on " + *e.clock;
  return out;
}

std::string to_string(const Verdict& v) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Finished>) return "finished " + format(x.value);
        if constexpr (std::is_same_v<T, Errored>) return "error " + to_string(x.error);
        if constexpr (std::is_same_v<T, Deadlocked>) return "deadlock";
        return "step limit";
      },
      v);
}

bool identical(const State& a, const State& b) {
  if (a.fresh_counter != b.fresh_counter || a.heap != b.heap) return false;
  auto same_set = [](const auto& self, const ActivitySet& x, const ActivitySet& y) -> bool {
    if (x.size() != y.size()) return false;
    for (auto ix = x.begin(), iy = y.begin(); ix != x.end(); ++ix, ++iy) {
      if (ix->first != iy->first || ix->second.view != iy->second.view) return false;
      if (!structurally_equal(*ix->second.expr, *iy->second.expr)) return false;
      if (!self(self, ix->second.children, iy->second.children)) return false;
    }
    return true;
  };
  return same_set(same_set, a.activities, b.activities);
}

namespace {

using Owner = FinishOwner<LocalView>;

struct Status {
  enum class Tag : std::uint8_t { Done, Enabled, Blocked, Error };

  Tag tag = Tag::Done;
  Rule rule = Rule::LetVal;
  RuntimeErrorKind error = RuntimeErrorKind::EAct;
  std::optional<Name> clock;

  static Status enabled(Rule r) { return {Tag::Enabled, r, {}, {}}; }
  static Status blocked() { return {Tag::Blocked, {}, {}, {}}; }
  static Status failed(RuntimeErrorKind k, std::optional<Name> c = {}) {
    return {Tag::Error, {}, k, std::move(c)};
  }
};

std::optional<Name> clock_name(const Value& v) {
  if (v.is_unit()) return std::nullopt;
  return v.name;
}

/// Where an async argument's clock comes from: the spawning activity's own
/// view, or (for the root of a finish body) a clock held by the activity
/// waiting on the finish.
struct ClockSource {
  Phase local_phase;
  const Name* holder;
};

std::optional<ClockSource> async_source(const Name& label, const Activity& a,
                                        const Owner* owner, const Name& c) {
  if (auto it = a.view.find(c); it != a.view.end()) return ClockSource{it->second, &label};
  for (const Owner* o = owner; o != nullptr; o = o->outer) {
    if (auto it = o->activity->view.find(c); it != o->activity->view.end()) {
      return ClockSource{it->second, &o->label};
    }
  }
  return std::nullopt;
}

bool child_finished(const Activity& a) {
  return a.view.empty() && is_value(*a.expr) && a.children.empty();
}

Status classify(const Heap& heap, const Name& label, const Activity& a,
                const Owner* owner) {
  const Expr* site = redex_site(*a.expr);
  if (site == nullptr) {
    return a.view.empty() ? Status{} : Status::failed(RuntimeErrorKind::EAct);
  }
  if (site->is<LetExpr>()) return Status::enabled(Rule::LetVal);
  if (site->is<MakeClockExpr>()) return Status::enabled(Rule::Make);
  if (site->is<FinishExpr>()) return Status::enabled(Rule::Finish);

  if (auto* async = site->as<AsyncExpr>()) {
    for (const auto& v : async->clocks) {
      if (!v.is_clock() || !heap.contains(v.name) ||
          !async_source(label, a, owner, v.name)) {
        return Status::failed(RuntimeErrorKind::EAsync, clock_name(v));
      }
    }
    return Status::enabled(Rule::Async);
  }

  if (auto* res = site->as<ResumeExpr>()) {
    const Value& v = res->clock;
    if (!v.is_clock() || !a.view.contains(v.name)) {
      return Status::failed(RuntimeErrorKind::EResume, clock_name(v));
    }
    auto it = heap.find(v.name);
    if (it == heap.end() || it->second.quiescent.contains(label)) {
      return Status::failed(RuntimeErrorKind::EResume, v.name);
    }
    return Status::enabled(Rule::Resume);
  }

  if (auto* drop = site->as<DropExpr>()) {
    const Value& v = drop->clock;
    if (!v.is_clock() || !a.view.contains(v.name) || !heap.contains(v.name)) {
      return Status::failed(RuntimeErrorKind::EDrop, clock_name(v));
    }
    return Status::enabled(Rule::Drop);
  }

  if (site->is<NextExpr>()) {
    for (const auto& [c, local] : a.view) {
      auto it = heap.find(c);
      if (it != heap.end() && it->second.phase == local &&
          !it->second.quiescent.contains(label)) {
        return Status::failed(RuntimeErrorKind::ENext1, c);
      }
    }
    for (const auto& [c, _] : a.view) {
      if (!heap.contains(c)) return Status::failed(RuntimeErrorKind::ENext2, c);
    }
    for (const auto& [c, local] : a.view) {
      const ClockValue& h = heap.at(c);
      bool in_c1 = h.phase == local && h.registered == h.quiescent;
      bool in_c2 = h.phase == local + 1;
      if (!in_c1 && !in_c2) return Status::blocked();
    }
    return Status::enabled(Rule::Next);
  }

  if (auto* join = site->as<JoinExpr>()) {
    if (!a.children.contains(join->label)) return Status::blocked();
    for (const auto& [_, child] : a.children) {
      if (!child_finished(child)) return Status::blocked();
    }
    return Status::enabled(Rule::Join);
  }

  return Status::blocked();
}

void serialize_heap(std::ostream& os, const Heap& h) {
  auto names = [&](const std::set<Name>& s) {
    os << '{';
    bool first = true;
    for (const auto& n : s) {
      if (!first) os << ',';
      os << n;
      first = false;
    }
    os << '}';
  };
  os << '{';
  bool first = true;
  for (const auto& [c, v] : h) {
    if (!first) os << ", ";
    os << c << ": (" << v.phase << ", ";
    names(v.registered);
    os << ", ";
    names(v.quiescent);
    os << ')';
    first = false;
  }
  os << '}';
}

void serialize_activities(std::ostream& os, const ActivitySet& set) {
  os << '{';
  bool first = true;
  for (const auto& [l, a] : set) {
    if (!first) os << ", ";
    os << l << ": ({";
    bool vfirst = true;
    for (const auto& [c, p] : a.view) {
      if (!vfirst) os << ',';
      os << c << ':' << p;
      vfirst = false;
    }
    os << "}, " << format(*a.expr) << ", ";
    serialize_activities(os, a.children);
    os << ')';
    first = false;
  }
  os << '}';
}

Name fresh_name(State& s, char prefix) {
  return std::string(1, prefix) + "#" + std::to_string(s.fresh_counter);
}

}  // namespace

State load(const ExprPtr& program) {
  State s;
  Activity root;
  root.expr = make_let("x#0", program, make_val(Value::unit()));
  s.activities.emplace("l#0", std::move(root));
  s.fresh_counter = 1;
  return s;
}

std::vector<Transition> enabled(const State& s) {
  std::vector<Transition> out;
  for_each_activity(s.activities, [&](const Path& path, const Activity& a, const Owner* owner) {
    auto st = classify(s.heap, path.back(), a, owner);
    if (st.tag == Status::Tag::Enabled) out.push_back(Transition{path, st.rule});
  });
  return out;
}

std::optional<RuntimeError> detect_error(const State& s) {
  std::optional<RuntimeError> found;
  for_each_activity(s.activities, [&](const Path& path, const Activity& a, const Owner* owner) {
    if (found) return;
    auto st = classify(s.heap, path.back(), a, owner);
    if (st.tag == Status::Tag::Error) found = RuntimeError{st.error, path, st.clock};
  });
  return found;
}

bool is_terminal(const State& s) { return all_terminated(s.activities); }

State step(const State& s, const Transition& t, std::vector<Name>* fresh) {
  std::vector<Owner> chain;
  const Owner* owner = owner_chain(s.activities, t.path, chain);
  const Activity* before = find_activity(s.activities, t.path);
  if (before == nullptr) throw IllegalTransition("no activity at " + format_path(t.path));
  auto st = classify(s.heap, t.label(), *before, owner);
  if (st.tag != Status::Tag::Enabled || st.rule != t.rule) {
    throw IllegalTransition("transition not enabled: " + to_string(t));
  }

  State out = s;
  Activity& a = *find_activity(out.activities, t.path);
  const Name& l = t.label();
  const Expr& site = *redex_site(*a.expr);
  auto contract = [&](ExprPtr with) {
    a.expr = plug(a.expr, [&](const ExprPtr&) { return with; });
  };

  switch (t.rule) {
    case Rule::LetVal: {
      auto& let = *site.as<LetExpr>();
      contract(substitute(let.body, let.var, let.bound->as<ValExpr>()->value));
      break;
    }
    case Rule::Make: {
      Name c = fresh_name(out, 'c');
      ++out.fresh_counter;
      out.heap[c] = ClockValue{0, {l}, {}};
      a.view[c] = 0;
      if (fresh) fresh->push_back(c);
      contract(make_val(Value::clock(c)));
      break;
    }
    case Rule::Async: {
      auto& async = *site.as<AsyncExpr>();
      std::uint64_t n = out.fresh_counter++;
      Name child_label = "l#" + std::to_string(n);
      Activity child;
      for (const auto& v : async.clocks) {
        if (child.view.contains(v.name)) continue;
        auto src = *async_source(l, *before, owner, v.name);
        ClockValue& h = out.heap.at(v.name);
        h.registered.insert(child_label);
        if (h.quiescent.contains(*src.holder)) h.quiescent.insert(child_label);
        child.view[v.name] = src.local_phase;
      }
      child.expr = wrap_body(async.body, "x#" + std::to_string(n));
      if (fresh) fresh->push_back(child_label);
      contract(make_val(Value::unit()));
      sibling_set(out.activities, t.path)->emplace(child_label, std::move(child));
      break;
    }
    case Rule::Resume: {
      const Name& c = site.as<ResumeExpr>()->clock.name;
      ClockValue& h = out.heap.at(c);
      if (h.phase == a.view.at(c)) h.quiescent.insert(l);
      contract(make_val(Value::unit()));
      break;
    }
    case Rule::Next: {
      std::vector<Name> ready;
      for (const auto& [c, local] : a.view) {
        const ClockValue& h = out.heap.at(c);
        if (h.phase == local && h.registered == h.quiescent) ready.push_back(c);
      }
      for (const auto& c : ready) {
        ClockValue& h = out.heap.at(c);
        ++h.phase;
        h.quiescent.clear();
      }
      for (auto& [_, local] : a.view) ++local;
      contract(make_val(Value::unit()));
      break;
    }
    case Rule::Drop: {
      const Name& c = site.as<DropExpr>()->clock.name;
      ClockValue& h = out.heap.at(c);
      if (h.registered == std::set<Name>{l}) {
        out.heap.erase(c);
      } else {
        h.registered.erase(l);
        h.quiescent.erase(l);
      }
      a.view.erase(c);
      contract(make_val(Value::unit()));
      break;
    }
    case Rule::Finish: {
      std::uint64_t n = out.fresh_counter++;
      Name child_label = "l#" + std::to_string(n);
      Activity child;
      child.expr = wrap_body(site.as<FinishExpr>()->body, "x#" + std::to_string(n));
      a.children.emplace(child_label, std::move(child));
      if (fresh) fresh->push_back(child_label);
      contract(make_join(child_label));
      break;
    }
    case Rule::Join: {
      const Name& l0 = site.as<JoinExpr>()->label;
      ExprPtr result = a.children.at(l0).expr;
      a.children.clear();
      contract(result);
      break;
    }
  }
  return out;
}

std::uint64_t heap_digest(const Heap& h) {
  std::ostringstream os;
  serialize_heap(os, h);
  return fnv1a64(os.str());
}

std::string format_state(const State& s) {
  std::ostringstream os;
  serialize_heap(os, s.heap);
  os << "; ";
  serialize_activities(os, s.activities);
  return os.str();
}

std::optional<Verdict> classify_final(const State& s) {
  if (auto err = detect_error(s)) return Errored{*err};
  if (is_terminal(s)) {
    auto it = s.activities.find("l#0");
    const Activity& root = it != s.activities.end() ? it->second : s.activities.begin()->second;
    return Finished{root.expr->as<ValExpr>()->value};
  }
  if (enabled(s).empty()) return Deadlocked{};
  return std::nullopt;
}

RunResult run(State s, Scheduler& scheduler, std::size_t max_steps,
              const StepObserver& observer) {
  RunResult result{StepLimitReached{}, {}, {}};
  for (std::size_t i = 0;; ++i) {
    if (auto err = detect_error(s)) {
      result.verdict = Errored{*err};
      break;
    }
    if (is_terminal(s)) {
      result.verdict = *classify_final(s);
      break;
    }
    auto ts = enabled(s);
    if (ts.empty()) {
      result.verdict = Deadlocked{};
      break;
    }
    if (i >= max_steps) {
      result.verdict = StepLimitReached{};
      break;
    }
    const Transition& t = ts[scheduler.choose(s, ts)];
    TraceStep rec;
    rec.index = i;
    rec.transition = t;
    State next = step(s, t, &rec.fresh);
    rec.heap_digest = heap_digest(next.heap);
    result.trace.push_back(std::move(rec));
    if (observer) observer(s, t, next);
    s = std::move(next);
  }
  result.final_state = std::move(s);
  return result;
}

State replay(State s, const Trace& trace) {
  for (const auto& rec : trace) {
    std::vector<Name> fresh;
    try {
      s = step(s, rec.transition, &fresh);
    } catch (const IllegalTransition& e) {
      throw ReplayMismatch("step " + std::to_string(rec.index) + ": " + e.what());
    }
    if (fresh != rec.fresh) {
      throw ReplayMismatch("step " + std::to_string(rec.index) + ": fresh names differ");
    }
    if (heap_digest(s.heap) != rec.heap_digest) {
      throw ReplayMismatch("step " + std::to_string(rec.index) + ": heap digest differs");
    }
  }
  return s;
}

}  // namespace xclocks
