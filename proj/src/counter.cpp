#include "xclocks/counter.hpp"

#include <sstream>

namespace xclocks {

namespace {

using Owner = FinishOwner<CounterView>;

bool same_set(const CounterActivitySet& x, const CounterActivitySet& y) {
  if (x.size() != y.size()) return false;
  for (auto ix = x.begin(), iy = y.begin(); ix != x.end(); ++ix, ++iy) {
    if (ix->first != iy->first || ix->second.view != iy->second.view) return false;
    if (!structurally_equal(*ix->second.expr, *iy->second.expr)) return false;
    if (!same_set(ix->second.children, iy->second.children)) return false;
  }
  return true;
}

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

const CounterViewEntry* async_source(const CounterActivity& a, const Owner* owner,
                                     const Name& c) {
  if (auto it = a.view.find(c); it != a.view.end()) return &it->second;
  for (const Owner* o = owner; o != nullptr; o = o->outer) {
    if (auto it = o->activity->view.find(c); it != o->activity->view.end()) return &it->second;
  }
  return nullptr;
}

Status classify(const CounterHeap& heap, const CounterActivity& a, const Owner* owner) {
  const Expr* site = redex_site(*a.expr);
  if (site == nullptr) {
    return a.view.empty() ? Status{} : Status::failed(RuntimeErrorKind::EAct);
  }
  if (site->is<LetExpr>()) return Status::enabled(Rule::LetVal);
  if (site->is<MakeClockExpr>()) return Status::enabled(Rule::Make);
  if (site->is<FinishExpr>()) return Status::enabled(Rule::Finish);

  if (auto* async = site->as<AsyncExpr>()) {
    for (const auto& v : async->clocks) {
      if (!v.is_clock() || !heap.contains(v.name) || !async_source(a, owner, v.name)) {
        return Status::failed(RuntimeErrorKind::EAsync, clock_name(v));
      }
    }
    return Status::enabled(Rule::Async);
  }

  if (auto* res = site->as<ResumeExpr>()) {
    const Value& v = res->clock;
    auto view = v.is_clock() ? a.view.find(v.name) : a.view.end();
    if (view == a.view.end()) return Status::failed(RuntimeErrorKind::EResume, clock_name(v));
    auto it = heap.find(v.name);
    if (it == heap.end() || (view->second.phase == it->second.phase && view->second.resumed)) {
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
    for (const auto& [c, e] : a.view) {
      auto it = heap.find(c);
      if (it != heap.end() && it->second.phase == e.phase && !e.resumed) {
        return Status::failed(RuntimeErrorKind::ENext1, c);
      }
    }
    for (const auto& [c, _] : a.view) {
      if (!heap.contains(c)) return Status::failed(RuntimeErrorKind::ENext2, c);
    }
    for (const auto& [c, e] : a.view) {
      const ClockCounters& h = heap.at(c);
      bool ready = h.phase == e.phase && e.resumed && h.q == h.r;
      bool behind = h.phase == e.phase + 1;
      if (!ready && !behind) return Status::blocked();
    }
    return Status::enabled(Rule::Next);
  }

  if (auto* join = site->as<JoinExpr>()) {
    if (!a.children.contains(join->label)) return Status::blocked();
    for (const auto& [_, child] : a.children) {
      if (!child.view.empty() || !is_value(*child.expr) || !child.children.empty()) {
        return Status::blocked();
      }
    }
    return Status::enabled(Rule::Join);
  }
  return Status::blocked();
}

void print_set(std::ostream& os, const CounterActivitySet& set) {
  os << '{';
  bool first = true;
  for (const auto& [l, a] : set) {
    if (!first) os << ", ";
    os << l << ": ({";
    bool vfirst = true;
    for (const auto& [c, e] : a.view) {
      if (!vfirst) os << ',';
      os << c << ":<" << e.phase << ',' << (e.resumed ? "t" : "f") << '>';
      vfirst = false;
    }
    os << "}, " << format(*a.expr) << ", ";
    print_set(os, a.children);
    os << ')';
    first = false;
  }
  os << '}';
}

CounterActivitySet project_set(const ActivitySet& set, const Heap& heap) {
  CounterActivitySet out;
  for (const auto& [l, a] : set) {
    CounterActivity na;
    for (const auto& [c, local] : a.view) {
      bool resumed = false;
      if (auto it = heap.find(c); it != heap.end()) {
        resumed = local < it->second.phase || it->second.quiescent.contains(l);
      }
      na.view.emplace(c, CounterViewEntry{local, resumed});
    }
    na.expr = a.expr;
    na.children = project_set(a.children, heap);
    out.emplace(l, std::move(na));
  }
  return out;
}

}  // namespace

bool operator==(const CounterState& a, const CounterState& b) {
  return a.heap == b.heap && same_set(a.activities, b.activities);
}

CounterState counter_load(const ExprPtr& program) {
  CounterState s;
  CounterActivity root;
  root.expr = make_let("x#0", program, make_val(Value::unit()));
  s.activities.emplace("l#0", std::move(root));
  s.fresh_counter = 1;
  return s;
}

std::vector<Transition> counter_enabled(const CounterState& s) {
  std::vector<Transition> out;
  for_each_activity(s.activities, [&](const Path& path, const CounterActivity& a,
                                      const Owner* owner) {
    auto st = classify(s.heap, a, owner);
    if (st.tag == Status::Tag::Enabled) out.push_back(Transition{path, st.rule});
  });
  return out;
}

std::optional<RuntimeError> counter_detect_error(const CounterState& s) {
  std::optional<RuntimeError> found;
  for_each_activity(s.activities, [&](const Path& path, const CounterActivity& a,
                                      const Owner* owner) {
    if (found) return;
    auto st = classify(s.heap, a, owner);
    if (st.tag == Status::Tag::Error) found = RuntimeError{st.error, path, st.clock};
  });
  return found;
}

CounterState counter_step(const CounterState& s, const Transition& t, std::vector<Name>* fresh) {
  std::vector<Owner> chain;
  const Owner* owner = owner_chain(s.activities, t.path, chain);
  const CounterActivity* before = find_activity(s.activities, t.path);
  if (before == nullptr) throw IllegalTransition("no activity at " + format_path(t.path));
  auto st = classify(s.heap, *before, owner);
  if (st.tag != Status::Tag::Enabled || st.rule != t.rule) {
    throw IllegalTransition("transition not enabled: " + to_string(t));
  }

  CounterState out = s;
  CounterActivity& a = *find_activity(out.activities, t.path);
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
      Name c = "c#" + std::to_string(out.fresh_counter++);
      out.heap[c] = ClockCounters{0, 1, 0};
      a.view[c] = CounterViewEntry{0, false};
      if (fresh) fresh->push_back(c);
      contract(make_val(Value::clock(c)));
      break;
    }
    case Rule::Async: {
      auto& async = *site.as<AsyncExpr>();
      std::uint64_t n = out.fresh_counter++;
      Name child_label = "l#" + std::to_string(n);
      CounterActivity child;
      for (const auto& v : async.clocks) {
        if (child.view.contains(v.name)) continue;
        const CounterViewEntry& src = *async_source(*before, owner, v.name);
        ClockCounters& h = out.heap.at(v.name);
        h.r += 1;
        if (src.resumed && src.phase == h.phase) h.q += 1;
        child.view[v.name] = src;
      }
      child.expr = wrap_body(async.body, "x#" + std::to_string(n));
      if (fresh) fresh->push_back(child_label);
      contract(make_val(Value::unit()));
      sibling_set(out.activities, t.path)->emplace(child_label, std::move(child));
      break;
    }
    case Rule::Resume: {
      const Name& c = site.as<ResumeExpr>()->clock.name;
      ClockCounters& h = out.heap.at(c);
      CounterViewEntry& e = a.view.at(c);
      if (e.phase == h.phase) {
        h.q += 1;
        e.resumed = true;
      }
      contract(make_val(Value::unit()));
      break;
    }
    case Rule::Next: {
      for (auto& [c, e] : a.view) {
        ClockCounters& h = out.heap.at(c);
        if (h.phase == e.phase && h.q == h.r) {
          h.phase += 1;
          h.q = 0;
        }
      }
      for (auto& [_, e] : a.view) {
        e.phase += 1;
        e.resumed = false;
      }
      contract(make_val(Value::unit()));
      break;
    }
    case Rule::Drop: {
      const Name& c = site.as<DropExpr>()->clock.name;
      ClockCounters& h = out.heap.at(c);
      const CounterViewEntry& e = a.view.at(c);
      if (h.r == 1) {
        out.heap.erase(c);
      } else {
        h.r -= 1;
        if (e.resumed && e.phase == h.phase) h.q -= 1;
      }
      a.view.erase(c);
      contract(make_val(Value::unit()));
      break;
    }
    case Rule::Finish: {
      std::uint64_t n = out.fresh_counter++;
      Name child_label = "l#" + std::to_string(n);
      CounterActivity child;
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

std::optional<Verdict> counter_classify_final(const CounterState& s) {
  if (auto err = counter_detect_error(s)) return Errored{*err};
  if (all_terminated(s.activities)) {
    auto it = s.activities.find("l#0");
    const auto& root = it != s.activities.end() ? it->second : s.activities.begin()->second;
    return Finished{root.expr->as<ValExpr>()->value};
  }
  if (counter_enabled(s).empty()) return Deadlocked{};
  return std::nullopt;
}

CounterState project(const State& s) {
  CounterState out;
  for (const auto& [c, v] : s.heap) {
    out.heap.emplace(c, ClockCounters{v.phase, static_cast<std::uint32_t>(v.registered.size()),
                                      static_cast<std::uint32_t>(v.quiescent.size())});
  }
  out.activities = project_set(s.activities, s.heap);
  out.fresh_counter = s.fresh_counter;
  return out;
}

std::string format_counter_state(const CounterState& s) {
  std::ostringstream os;
  os << '{';
  bool first = true;
  for (const auto& [c, h] : s.heap) {
    if (!first) os << ", ";
    os << c << ": <" << h.phase << ',' << h.r << ',' << h.q << '>';
    first = false;
  }
  os << "}; ";
  print_set(os, s.activities);
  return os.str();
}

namespace {

bool same_verdict(const Verdict& a, const Verdict& b) {
  if (a.index() != b.index()) return false;
  if (auto* fa = std::get_if<Finished>(&a)) return fa->value == std::get<Finished>(b).value;
  if (auto* ea = std::get_if<Errored>(&a)) return ea->error == std::get<Errored>(b).error;
  return true;
}

}  // namespace

LockstepResult lockstep_compare(const ExprPtr& program, Scheduler& scheduler,
                                std::size_t max_steps) {
  LockstepResult result;
  State s = load(program);
  CounterState k = counter_load(program);
  auto diverge = [&](std::string what) {
    result.equal = false;
    std::ostringstream os;
    os << "step " << result.steps << ": " << what << "\n  set:     "
       << format_counter_state(project(s)) << "\n  counter: " << format_counter_state(k);
    result.divergence = os.str();
    return result;
  };

  for (;;) {
    if (!(project(s) == k)) return diverge("projection differs");
    auto sv = classify_final(s);
    auto kv = counter_classify_final(k);
    if (sv || kv) {
      if (!sv || !kv || !same_verdict(*sv, *kv)) {
        return diverge("verdicts differ: " + (sv ? to_string(*sv) : "running") + " vs " +
                       (kv ? to_string(*kv) : "running"));
      }
      result.verdict = sv;
      return result;
    }
    auto ts = enabled(s);
    if (ts != counter_enabled(k)) return diverge("enabled transitions differ");
    if (result.steps >= max_steps) {
      result.verdict = StepLimitReached{};
      return result;
    }
    const Transition& t = ts[scheduler.choose(s, ts)];
    s = step(s, t);
    k = counter_step(k, t);
    ++result.steps;
  }
}

}  // namespace xclocks
