#include "xclocks/statecheck.hpp"

#include "xclocks/typecheck.hpp"

namespace xclocks {

const char* to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::RegisteredMismatch: return "RegisteredMismatch";
    case ViolationKind::QuiescentNotRegistered: return "QuiescentNotRegistered";
    case ViolationKind::DanglingView: return "DanglingView";
    case ViolationKind::PhaseLagViolation: return "PhaseLagViolation";
    case ViolationKind::OrphanChildren: return "OrphanChildren";
  }
  return "?";
}

WellFormedReport check_wellformed(const State& s, WellFormedOptions options) {
  WellFormedReport report;
  auto add = [&](ViolationKind k, std::string w) {
    report.violations.push_back(Violation{k, std::move(w)});
  };

  std::map<Name, std::set<Name>> holders;
  for_each_activity(s.activities, [&](const Path& path, const Activity& a, const auto*) {
    const Name& l = path.back();
    for (const auto& [c, local] : a.view) {
      holders[c].insert(l);
      auto it = s.heap.find(c);
      if (it == s.heap.end()) {
        if (options.extended) add(ViolationKind::DanglingView, l + " views " + c);
        continue;
      }
      if (options.extended && it->second.phase != local && it->second.phase != local + 1) {
        add(ViolationKind::PhaseLagViolation,
            l + " is at phase " + std::to_string(local) + " of " + c + " (global " +
                std::to_string(it->second.phase) + ")");
      }
    }
    if (!a.children.empty()) {
      const Name* joined = pending_join(a);
      if (joined == nullptr || !a.children.contains(*joined)) {
        add(ViolationKind::OrphanChildren, l + " has children but no pending join");
      }
    }
  });

  for (const auto& [c, v] : s.heap) {
    auto it = holders.find(c);
    const std::set<Name> empty;
    const std::set<Name>& h = it == holders.end() ? empty : it->second;
    if (v.registered != h) add(ViolationKind::RegisteredMismatch, c);
    for (const auto& l : v.quiescent) {
      if (!v.registered.contains(l)) {
        add(ViolationKind::QuiescentNotRegistered, l + " quiescent on " + c);
      }
    }
  }
  return report;
}

namespace {

struct StateTyper {
  const State& s;
  Typing gamma;

  std::optional<std::string> type_set(const ActivitySet& set, Typing& scope) {
    for (const auto& [l, a] : set) {
      Type t;
      if (auto err = type_activity(l, a, t)) return err;
      scope.insert_or_assign(l, t);
    }
    return std::nullopt;
  }

  std::optional<std::string> type_activity(const Name& l, const Activity& a, Type& out) {
    Typing local = gamma;
    if (auto err = type_set(a.children, local)) return err;

    ClockSet reg;
    ClockSet quiesced;
    for (const auto& [c, phase] : a.view) {
      auto g = gamma.find(c);
      if (g == gamma.end()) return l + ": " + c + " is not in the heap";
      reg.insert(g->second.alpha);
      const ClockValue& h = s.heap.at(c);
      if (h.quiescent.contains(l) || phase < h.phase) quiesced.insert(g->second.alpha);
    }
    try {
      auto r = check_expr(local, reg, quiesced, *a.expr);
      if (!r.reg.empty()) {
        return l + ": activity ends registered with " + std::to_string(r.reg.size()) +
               " clock(s)";
      }
      out = r.type;
    } catch (const TypeError& e) {
      return l + ": " + e.what();
    }
    return std::nullopt;
  }
};

}  // namespace

StateTyping typecheck_state(const State& s) {
  auto wf = check_wellformed(s);
  if (!wf.ok()) {
    const auto& v = wf.violations.front();
    return {false, std::string("ill-formed: ") + to_string(v.kind) + " " + v.witness};
  }
  StateTyper typer{s, {}};
  std::uint32_t next = 1;
  for (const auto& [c, _] : s.heap) typer.gamma.emplace(c, Type::clock(SingletonId{next++}));
  Typing top = typer.gamma;
  if (auto err = typer.type_set(s.activities, top)) return {false, *err};
  return {true, {}};
}

}  // namespace xclocks
