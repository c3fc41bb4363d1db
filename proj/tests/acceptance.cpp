// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failed criteria.

#include <chrono>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <regex>
#include <sstream>

#include "support.hpp"
#include "xclocks/counter.hpp"
#include "xclocks/explore.hpp"
#include "xclocks/runtime.hpp"
#include "xclocks/statecheck.hpp"
#include "xclocks/typecheck.hpp"

using namespace xclocks;
using xclocks::fixtures::corpus_names;
using xclocks::fixtures::corpus_program;
using xclocks::fixtures::read_corpus;
using xclocks::fixtures::typed_corpus_names;

namespace {

struct Result {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    if (pass) detail = why;
    pass = false;
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// 1 -------------------------------------------------------------------------

Result golden_typechecks() {
  Result v;
  auto t0 = Clock::now();
  for (const char* name : {"ex1", "ex2", "ex3", "ex7"}) {
    auto out = check_program(*corpus_program(name));
    if (!out.ok()) v.fail(std::string(name) + " rejected: " + out.error->message);
  }
  for (auto [name, phrase] : {std::pair{"ex4", "already quiescent"},
                              std::pair{"ex5", "did not drop"},
                              std::pair{"ex6", "not in scope of finish"}}) {
    auto out = check_program(*corpus_program(name));
    if (out.ok()) {
      v.fail(std::string(name) + " accepted");
    } else if (out.error->message.find(phrase) == std::string::npos) {
      v.fail(std::string(name) + ": '" + out.error->message + "' lacks '" + phrase + "'");
    }
  }
  double secs = seconds_since(t0);
  if (secs >= 1.0) v.fail("took " + std::to_string(secs) + " s");
  if (v.pass) v.detail = "ex1 ex2 ex3 ex7 accepted, ex4 ex5 ex6 rejected with the expected diagnostics";
  return v;
}

// 2 -------------------------------------------------------------------------

/// Strips blanks and renames singleton names in order of first appearance.
std::string normalise(std::string s) {
  s.erase(std::remove_if(s.begin(), s.end(), ::isspace), s.end());
  static const std::regex alpha("alpha[0-9]*");
  std::map<std::string, int> ids;
  std::string out;
  auto it = std::sregex_iterator(s.begin(), s.end(), alpha);
  std::size_t last = 0;
  for (; it != std::sregex_iterator(); ++it) {
    out += s.substr(last, static_cast<std::size_t>(it->position()) - last);
    auto [pos, fresh] = ids.try_emplace(it->str(), static_cast<int>(ids.size()) + 1);
    out += "A" + std::to_string(pos->second);
    last = static_cast<std::size_t>(it->position() + it->length());
  }
  return out + s.substr(last);
}

Result annotation_fidelity() {
  Result v;
  static const std::regex comment(
      R"(//\s*((?:\{[^}]*\}|emptyset)\s*,\s*(?:\{[^}]*\}|emptyset)\s*,\s*(?:\{[^}]*\}|emptyset)))");
  std::size_t matched = 0;
  for (const char* name : {"ex1", "ex2"}) {
    auto out = check_program(*corpus_program(name));
    if (!out.ok()) {
      v.fail(std::string(name) + " rejected");
      continue;
    }
    std::map<int, std::vector<std::string>> emitted;
    for (const auto& a : out.annotations) {
      emitted[a.pos.line].push_back(normalise(render_assumptions(a.gamma, a.reg, a.quiesced)));
    }
    std::istringstream src(read_corpus(name));
    std::string line;
    int lineno = 0;
    while (std::getline(src, line)) {
      ++lineno;
      std::smatch m;
      if (!std::regex_search(line, m, comment)) continue;
      std::string want = normalise(m[1].str());
      const auto& got = emitted[lineno];
      if (std::find(got.begin(), got.end(), want) == got.end()) {
        v.fail(std::string(name) + " line " + std::to_string(lineno) + ": want " + want);
      } else {
        ++matched;
      }
    }
  }
  if (matched != 14) v.fail("matched " + std::to_string(matched) + " of 14 comment lines");
  if (v.pass) v.detail = "14/14 listing comments of examples 1 and 2 reproduced";
  return v;
}

// 3 -------------------------------------------------------------------------

/// Heap rendered with labels replaced by their roles (l1, l2, l3).
std::string role_heap(const State& s, const std::map<Name, std::string>& roles) {
  auto role = [&](const Name& l) {
    auto it = roles.find(l);
    return it == roles.end() ? l : it->second;
  };
  std::string out = "{";
  for (const auto& [c, v] : s.heap) {
    out += "c:(" + std::to_string(v.phase) + ",{";
    std::set<std::string> r, q;
    for (const auto& l : v.registered) r.insert(role(l));
    for (const auto& l : v.quiescent) q.insert(role(l));
    std::string rs, qs;
    for (const auto& x : r) rs += (rs.empty() ? "" : ",") + x;
    for (const auto& x : q) qs += (qs.empty() ? "" : ",") + x;
    out += rs + "},{" + qs + "})";
  }
  return out + "}";
}

Result trace_reproduction() {
  Result v;
  FirstScheduler first;
  std::vector<State> states{load(corpus_program("syntax"))};
  auto r = run(states.front(), first, 1000, [&](const State&, const Transition&, const State& n) {
    states.push_back(n);
  });
  if (!std::holds_alternative<Finished>(r.verdict)) v.fail("run did not finish");

  // l1 is the root, l2 the body of the outer finish, l3 the clocked async.
  std::vector<std::string> expected = {
      "join",                              // l1 waits on l2 with an empty heap
      "{c:(0,{l2},{})}",                   // after make
      "{c:(0,{l2,l3},{})}",                // l3 registered
      "{c:(0,{l2,l3},{l2,l3})}",           // both resumed
      "{c:(1,{l2,l3},{})} l2:1 l3:0",      // l2's next
  };
  std::size_t next = 0;
  for (const auto& s : states) {
    if (next == expected.size()) break;
    const auto& root = s.activities.at("l#0");
    const Name* l2 = pending_join(root);
    if (l2 == nullptr) continue;
    std::map<Name, std::string> roles{{"l#0", "l1"}, {*l2, "l2"}};
    for (const auto& [c, cv] : s.heap) {
      for (const auto& l : cv.registered) {
        if (l != *l2) roles.emplace(l, "l3");
      }
    }
    std::string shape;
    if (next == 0) {
      const auto& body = root.children.at(*l2);
      if (s.heap.empty() && body.view.empty() && root.view.empty()) shape = "join";
    } else {
      shape = role_heap(s, roles);
      if (next == 4 && s.heap.size() == 1) {
        const Name& c = s.heap.begin()->first;
        for (const auto& [l, a] : root.children) {
          if (roles.count(l) && a.view.count(c)) {
            shape += " " + roles[l] + ":" + std::to_string(a.view.at(c));
          }
        }
      }
    }
    if (shape == expected[next]) ++next;
  }
  if (next != expected.size()) v.fail("never reached: " + expected[next]);
  if (v.pass) v.detail = "5 displayed states reached in order along " +
                         std::to_string(states.size() - 1) + " steps";
  return v;
}

// 4, 5 ----------------------------------------------------------------------

struct Explored {
  std::string name;
  ExploreReport report;
  double seconds;
};

std::vector<Explored> explore_typed() {
  std::vector<Explored> out;
  for (const char* name : {"ex1", "ex2", "ex3", "ex7"}) {
    auto t0 = Clock::now();
    auto r = explore(corpus_program(name));
    out.push_back({name, std::move(r), seconds_since(t0)});
  }
  return out;
}

Result type_safety(const std::vector<Explored>& runs) {
  Result v;
  std::ostringstream detail;
  for (const auto& e : runs) {
    if (e.report.error_states != 0) v.fail(e.name + ": " + std::to_string(e.report.error_states) + " error states");
    if (e.report.truncated) v.fail(e.name + ": bounds reached");
    if (e.seconds >= 10.0) v.fail(e.name + ": " + std::to_string(e.seconds) + " s");
    detail << e.name << "=" << e.report.states_visited << " ";
  }
  if (v.pass) v.detail = "0 error states; states " + detail.str();
  return v;
}

Result progress(const std::vector<Explored>& runs) {
  Result v;
  for (const auto& e : runs) {
    if (e.report.deadlock_states != 0) {
      v.fail(e.name + ": " + std::to_string(e.report.deadlock_states) + " deadlocks");
    }
    if (e.report.terminal_states.empty()) v.fail(e.name + ": no terminal state");
  }
  if (v.pass) v.detail = "every maximal state is terminal";
  return v;
}

// 6 -------------------------------------------------------------------------

Result deadlock_witness() {
  Result v;
  auto t0 = Clock::now();
  auto program = corpus_program("ex6");
  auto r = explore(program);
  double secs = seconds_since(t0);
  if (r.deadlocks.empty()) {
    v.fail("no deadlock found");
    return v;
  }
  const auto& w = r.deadlocks.front();
  std::vector<Path> at_next, at_join;
  for_each_activity(w.state.activities, [&](const Path& path, const Activity& a, const auto*) {
    const Expr* site = redex_site(*a.expr);
    if (site != nullptr && site->is<NextExpr>()) at_next.push_back(path);
    if (site != nullptr && site->is<JoinExpr>()) at_join.push_back(path);
  });
  bool ancestor = false;
  for (const auto& n : at_next) {
    for (const auto& j : at_join) {
      if (j.size() < n.size() && std::equal(j.begin(), j.end(), n.begin())) ancestor = true;
    }
  }
  if (!ancestor) v.fail("no activity at next under an ancestor at join");
  if (!identical(replay(load(program), w.trace), w.state)) v.fail("trace does not replay");
  for (const auto& d : r.deadlocks) {
    if (d.trace.size() < w.trace.size()) v.fail("first witness is not minimal");
  }
  if (secs >= 5.0) v.fail("took " + std::to_string(secs) + " s");
  if (v.pass) {
    v.detail = std::to_string(r.deadlock_states) + " deadlock(s), minimal trace of " +
               std::to_string(w.trace.size()) + " steps";
  }
  return v;
}

// 7 -------------------------------------------------------------------------

Result dynamic_errors() {
  Result v;
  for (auto [name, kind] : {std::pair{"ex4", RuntimeErrorKind::EResume},
                            std::pair{"ex5", RuntimeErrorKind::EAct}}) {
    for (std::uint64_t seed = 0; seed <= 50; ++seed) {
      std::unique_ptr<Scheduler> sched;
      if (seed == 0) {
        sched = std::make_unique<FirstScheduler>();
      } else {
        sched = std::make_unique<RandomScheduler>(seed);
      }
      auto r = run(load(corpus_program(name)), *sched, 1000);
      auto* err = std::get_if<Errored>(&r.verdict);
      if (err == nullptr || err->error.kind != kind) {
        v.fail(std::string(name) + " seed " + std::to_string(seed) + ": " + to_string(r.verdict));
      }
    }
  }
  if (v.pass) v.detail = "ex4 E-resume, ex5 E-act under first and 50 random schedules";
  return v;
}

// 8 -------------------------------------------------------------------------

Result preservation() {
  Result v;
  auto t0 = Clock::now();
  std::size_t steps = 0;
  std::size_t typed_steps = 0;
  for (const auto& name : corpus_names()) {
    auto program = corpus_program(name);
    bool should_type = std::find(typed_corpus_names().begin(), typed_corpus_names().end(),
                                 name) != typed_corpus_names().end();
    State initial = load(program);
    bool initial_typed = static_cast<bool>(typecheck_state(initial));
    if (initial_typed != should_type) v.fail(name + ": load typability disagrees with checker");
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      RandomScheduler sched(seed);
      bool typed = initial_typed;
      run(initial, sched, 1000, [&](const State&, const Transition& t, const State& next) {
        ++steps;
        auto wf = check_wellformed(next);
        if (!wf.ok()) {
          v.fail(name + " seed " + std::to_string(seed) + " after " + to_string(t) + ": " +
                 to_string(wf.violations.front().kind));
        }
        if (!typed) return;
        ++typed_steps;
        auto r = typecheck_state(next);
        if (!r) {
          v.fail(name + " seed " + std::to_string(seed) + " after " + to_string(t) + ": " +
                 r.diagnostic);
          typed = false;
        }
      });
    }
  }
  double secs = seconds_since(t0);
  if (secs >= 60.0) v.fail("took " + std::to_string(secs) + " s");
  if (v.pass) {
    v.detail = std::to_string(steps) + " steps well-formed, " + std::to_string(typed_steps) +
               " typed steps preserved typability";
  }
  return v;
}

// 9 -------------------------------------------------------------------------

Result counter_equivalence() {
  Result v;
  auto t0 = Clock::now();
  std::size_t steps = 0;
  std::size_t runs = 0;
  for (const auto& name : corpus_names()) {
    auto program = corpus_program(name);
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      RandomScheduler sched(seed);
      auto r = lockstep_compare(program, sched, 1000);
      ++runs;
      steps += r.steps;
      if (!r.equal) v.fail(name + " seed " + std::to_string(seed) + ": " + r.divergence);
    }
  }
  double secs = seconds_since(t0);
  if (secs >= 60.0) v.fail("took " + std::to_string(secs) + " s");
  if (v.pass) {
    v.detail = std::to_string(runs) + " lockstep runs, " + std::to_string(steps) +
               " steps, 0 divergences";
  }
  return v;
}

// 10 ------------------------------------------------------------------------

Result structural_invariants() {
  Result v;
  std::mt19937_64 rng(2024);
  std::size_t steps = 0;
  const int programs = 500;
  for (int i = 0; i < programs; ++i) {
    auto src = xclocks::fixtures::generate_program(rng, 6);
    auto program = parse(src);
    if (!check_program(*program).ok()) {
      v.fail("generated program rejected: " + src);
      continue;
    }
    State initial = load(program);
    RandomScheduler sched(static_cast<std::uint64_t>(i));
    auto r = run(initial, sched, 5000, [&](const State& b, const Transition& t, const State& a) {
      ++steps;
      if (auto problem = xclocks::fixtures::step_violation(b, t, a)) v.fail(*problem + " in " + src);
    });
    if (!identical(replay(initial, r.trace), r.final_state)) v.fail("replay differs: " + src);
  }
  if (v.pass) {
    v.detail = std::to_string(programs) + " programs, " + std::to_string(steps) +
               " steps, 0 violations";
  }
  return v;
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int n, const char* title, const std::function<Result()>& f) {
    auto t0 = Clock::now();
    Result v;
    try {
      v = f();
    } catch (const std::exception& e) {
      v.fail(std::string("exception: ") + e.what());
    }
    std::ostringstream secs;
    secs.precision(2);
    secs << std::fixed << seconds_since(t0);
    std::cout << (v.pass ? "PASS" : "FAIL") << "  " << n << ". " << title << ": " << v.detail
              << " (" << secs.str() << " s)" << std::endl;
    if (!v.pass) ++failures;
  };

  report(1, "golden typechecks", golden_typechecks);
  report(2, "annotation fidelity", annotation_fidelity);
  report(3, "trace reproduction", trace_reproduction);
  std::vector<Explored> runs;
  report(4, "empirical type safety", [&] {
    runs = explore_typed();
    return type_safety(runs);
  });
  report(5, "empirical progress", [&] { return progress(runs); });
  report(6, "deadlock witness", deadlock_witness);
  report(7, "dynamic error witnesses", dynamic_errors);
  report(8, "preservation", preservation);
  report(9, "counter backend equivalence", counter_equivalence);
  report(10, "structural invariants", structural_invariants);
  return failures;
}
