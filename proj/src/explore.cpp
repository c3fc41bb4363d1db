#include "xclocks/explore.hpp"

#include <algorithm>
#include <deque>
#include <sstream>
#include <unordered_map>

#include "xclocks/digest.hpp"

namespace xclocks {

namespace {

using NameMap = std::function<Name(const Name&)>;

Value map_value(const Value& v, const NameMap& f) {
  if (v.is_unit()) return v;
  return Value{v.kind, f(v.name)};
}

ExprPtr map_names(const ExprPtr& e, const NameMap& f) {
  return std::visit(
      [&](const auto& n) -> ExprPtr {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, ValExpr>) return make_val(map_value(n.value, f));
        if constexpr (std::is_same_v<T, LetExpr>) {
          return make_let(f(n.var), map_names(n.bound, f), map_names(n.body, f));
        }
        if constexpr (std::is_same_v<T, MakeClockExpr>) return e;
        if constexpr (std::is_same_v<T, NextExpr>) return e;
        if constexpr (std::is_same_v<T, AsyncExpr>) {
          std::vector<Value> cs;
          for (const auto& c : n.clocks) cs.push_back(map_value(c, f));
          return make_async(std::move(cs), map_names(n.body, f));
        }
        if constexpr (std::is_same_v<T, ResumeExpr>) return make_resume(map_value(n.clock, f));
        if constexpr (std::is_same_v<T, DropExpr>) return make_drop(map_value(n.clock, f));
        if constexpr (std::is_same_v<T, FinishExpr>) return make_finish(map_names(n.body, f));
        if constexpr (std::is_same_v<T, JoinExpr>) return make_join(f(n.label));
      },
      e->node);
}

void collect_names(const Expr& e, std::vector<Name>& out) {
  auto value = [&](const Value& v) {
    if (!v.is_unit() && is_machine_name(v.name)) out.push_back(v.name);
  };
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, ValExpr>) value(n.value);
        if constexpr (std::is_same_v<T, LetExpr>) {
          if (is_machine_name(n.var)) out.push_back(n.var);
          collect_names(*n.bound, out);
          collect_names(*n.body, out);
        }
        if constexpr (std::is_same_v<T, AsyncExpr>) {
          for (const auto& c : n.clocks) value(c);
          collect_names(*n.body, out);
        }
        if constexpr (std::is_same_v<T, ResumeExpr>) value(n.clock);
        if constexpr (std::is_same_v<T, DropExpr>) value(n.clock);
        if constexpr (std::is_same_v<T, FinishExpr>) collect_names(*n.body, out);
        if constexpr (std::is_same_v<T, JoinExpr>) out.push_back(n.label);
      },
      e.node);
}

/// Name-free description of a held clock, used to order view entries and
/// siblings before names are assigned.
std::string clock_shape(const Heap& heap, const Name& l, const Name& c, Phase local) {
  std::ostringstream os;
  auto it = heap.find(c);
  if (it == heap.end()) {
    os << "?" << local;
  } else {
    const ClockValue& h = it->second;
    os << local << '/' << h.phase << '/' << h.registered.size() << '/' << h.quiescent.size()
       << (h.quiescent.contains(l) ? "q" : "-");
  }
  return os.str();
}

std::string anonymous_signature(const Heap& heap, const Name& l, const Activity& a) {
  static const NameMap hide = [](const Name& n) { return is_machine_name(n) ? Name("#") : n; };
  std::vector<std::string> shapes;
  for (const auto& [c, local] : a.view) shapes.push_back(clock_shape(heap, l, c, local));
  std::sort(shapes.begin(), shapes.end());
  std::vector<std::string> kids;
  for (const auto& [cl, child] : a.children) kids.push_back(anonymous_signature(heap, cl, child));
  std::sort(kids.begin(), kids.end());

  std::string out = format(*map_names(a.expr, hide)) + "[";
  for (const auto& s : shapes) out += s + ",";
  out += "](";
  for (const auto& k : kids) out += k + ";";
  return out + ")";
}

class Canonicalizer {
 public:
  explicit Canonicalizer(const State& s) : s_(s) {}

  State run() {
    visit_set(s_.activities);
    for (const auto& [c, _] : s_.heap) assign(c);

    State out;
    auto f = [this](const Name& n) { return rename(n); };
    for (const auto& [c, v] : s_.heap) {
      ClockValue nv{v.phase, {}, {}};
      for (const auto& l : v.registered) nv.registered.insert(rename(l));
      for (const auto& l : v.quiescent) nv.quiescent.insert(rename(l));
      out.heap.emplace(rename(c), std::move(nv));
    }
    out.activities = copy_set(s_.activities, f);
    return out;
  }

 private:
  std::vector<std::pair<std::string, const ActivitySet::value_type*>> ordered(
      const ActivitySet& set) const {
    std::vector<std::pair<std::string, const ActivitySet::value_type*>> v;
    for (const auto& entry : set) {
      v.emplace_back(anonymous_signature(s_.heap, entry.first, entry.second), &entry);
    }
    std::stable_sort(v.begin(), v.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    return v;
  }

  void visit_set(const ActivitySet& set) {
    for (const auto& [_, entry] : ordered(set)) {
      const auto& [l, a] = *entry;
      assign(l);
      std::vector<Name> names;
      collect_names(*a.expr, names);
      for (const auto& n : names) assign(n);
      std::vector<std::pair<std::string, Name>> view;
      for (const auto& [c, local] : a.view) view.emplace_back(clock_shape(s_.heap, l, c, local), c);
      std::stable_sort(view.begin(), view.end(),
                       [](const auto& x, const auto& y) { return x.first < y.first; });
      for (const auto& [_, c] : view) assign(c);
      visit_set(a.children);
    }
  }

  void assign(const Name& n) {
    if (!is_machine_name(n) || map_.contains(n)) return;
    map_.emplace(n, std::string(1, n[0]) + "#" + std::to_string(map_.size()));
  }

  Name rename(const Name& n) const {
    auto it = map_.find(n);
    return it == map_.end() ? n : it->second;
  }

  ActivitySet copy_set(const ActivitySet& set, const NameMap& f) const {
    ActivitySet out;
    for (const auto& [l, a] : set) {
      Activity na;
      for (const auto& [c, p] : a.view) na.view.emplace(rename(c), p);
      na.expr = map_names(a.expr, f);
      na.children = copy_set(a.children, f);
      out.emplace(rename(l), std::move(na));
    }
    return out;
  }

  const State& s_;
  std::map<Name, Name> map_;
};

struct Node {
  std::size_t parent;
  Transition via;
  std::size_t depth;
};

std::vector<Transition> path_to(const std::vector<Node>& nodes, std::size_t i) {
  std::vector<Transition> ts;
  while (i != 0) {
    ts.push_back(nodes[i].via);
    i = nodes[i].parent;
  }
  std::reverse(ts.begin(), ts.end());
  return ts;
}

}  // namespace

std::string canonical_form(const State& s) {
  return format_state(Canonicalizer(s).run());
}

std::uint64_t canonicalize(const State& s) { return fnv1a64(canonical_form(s)); }

Trace trace_from(const State& initial, const std::vector<Transition>& transitions) {
  Trace trace;
  State s = initial;
  for (std::size_t i = 0; i < transitions.size(); ++i) {
    TraceStep rec;
    rec.index = i;
    rec.transition = transitions[i];
    s = step(s, transitions[i], &rec.fresh);
    rec.heap_digest = heap_digest(s.heap);
    trace.push_back(std::move(rec));
  }
  return trace;
}

ExploreReport explore(const State& initial, const ExploreOptions& options) {
  ExploreReport report;
  std::vector<Node> nodes;
  std::unordered_map<std::uint64_t, std::vector<std::string>> seen;
  std::deque<std::pair<std::size_t, State>> frontier;

  auto admit = [&](const State& s) -> bool {
    std::string form = canonical_form(s);
    auto& bucket = seen[fnv1a64(form)];
    if (std::find(bucket.begin(), bucket.end(), form) != bucket.end()) return false;
    if (!bucket.empty()) ++report.digest_collisions;
    bucket.push_back(std::move(form));
    return true;
  };

  admit(initial);
  nodes.push_back(Node{0, {}, 0});
  frontier.emplace_back(0, initial);

  while (!frontier.empty()) {
    auto [id, s] = std::move(frontier.front());
    frontier.pop_front();
    ++report.states_visited;

    if (auto err = detect_error(s)) {
      ++report.error_states;
      bool known = std::any_of(report.errors.begin(), report.errors.end(),
                               [&](const auto& w) { return w.error.kind == err->kind; });
      if (!known) report.errors.push_back({*err, trace_from(initial, path_to(nodes, id)), s});
      continue;
    }
    auto ts = enabled(s);
    if (ts.empty()) {
      if (is_terminal(s)) {
        report.terminal_states.push_back(canonical_form(s));
      } else {
        ++report.deadlock_states;
        if (report.deadlocks.size() < options.max_deadlock_traces) {
          report.deadlocks.push_back({trace_from(initial, path_to(nodes, id)), s});
        }
      }
      continue;
    }
    if (nodes[id].depth >= options.max_depth) {
      report.truncated = true;
      continue;
    }
    for (const auto& t : ts) {
      State next = step(s, t);
      ++report.transitions;
      if (!admit(next)) continue;
      if (nodes.size() >= options.max_states) {
        report.truncated = true;
        continue;
      }
      nodes.push_back(Node{id, t, nodes[id].depth + 1});
      frontier.emplace_back(nodes.size() - 1, std::move(next));
    }
  }
  std::sort(report.terminal_states.begin(), report.terminal_states.end());
  return report;
}

ExploreReport explore(const ExprPtr& program, const ExploreOptions& options) {
  return explore(load(program), options);
}

}  // namespace xclocks
