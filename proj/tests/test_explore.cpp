#include <gtest/gtest.h>

#include <algorithm>

#include "support.hpp"
#include "xclocks/explore.hpp"

using namespace xclocks;

TEST(Explore, Unit) {
  auto r = explore(parse("()"));
  EXPECT_EQ(r.terminal_states.size(), 1u);
  EXPECT_EQ(r.error_states, 0u);
  EXPECT_EQ(r.deadlock_states, 0u);
  EXPECT_FALSE(r.truncated);
}

TEST(Explore, TypedCorpusIsClean) {
  for (const auto& name : fixtures::typed_corpus_names()) {
    auto r = explore(fixtures::corpus_program(name));
    EXPECT_TRUE(r.clean()) << name;
    EXPECT_FALSE(r.terminal_states.empty()) << name;
    EXPECT_EQ(r.digest_collisions, 0u);
  }
}

TEST(Explore, ErrorWitnessesMatchStaticDiagnosis) {
  auto r4 = explore(fixtures::corpus_program("ex4"));
  ASSERT_FALSE(r4.errors.empty());
  EXPECT_EQ(r4.errors.front().error.kind, RuntimeErrorKind::EResume);
  auto r5 = explore(fixtures::corpus_program("ex5"));
  ASSERT_FALSE(r5.errors.empty());
  EXPECT_EQ(r5.errors.front().error.kind, RuntimeErrorKind::EAct);
}

TEST(Explore, WitnessTracesReplay) {
  for (const char* name : {"ex4", "ex5", "ex6"}) {
    auto program = fixtures::corpus_program(name);
    auto r = explore(program);
    for (const auto& w : r.errors) {
      EXPECT_TRUE(identical(replay(load(program), w.trace), w.state)) << name;
    }
    for (const auto& d : r.deadlocks) {
      EXPECT_TRUE(identical(replay(load(program), d.trace), d.state)) << name;
    }
  }
}

TEST(Explore, Example6Deadlock) {
  auto r = explore(fixtures::corpus_program("ex6"));
  EXPECT_EQ(r.error_states, 0u);
  ASSERT_FALSE(r.deadlocks.empty());
  const State& s = r.deadlocks.front().state;
  bool join = false;
  bool next = false;
  for_each_activity(s.activities, [&](const Path& path, const Activity& a, const auto*) {
    const Expr* site = redex_site(*a.expr);
    if (site == nullptr) return;
    if (site->is<JoinExpr>() && path.size() == 1) join = true;
    if (site->is<NextExpr>() && path.size() == 2) next = true;
  });
  EXPECT_TRUE(join);
  EXPECT_TRUE(next);
}

TEST(Explore, Truncation) {
  ExploreOptions small;
  small.max_states = 5;
  auto r = explore(fixtures::corpus_program("ex3"), small);
  EXPECT_TRUE(r.truncated);
  EXPECT_LE(r.states_visited, 5u);
  ExploreOptions shallow;
  shallow.max_depth = 2;
  EXPECT_TRUE(explore(fixtures::corpus_program("ex3"), shallow).truncated);
}

TEST(Canonical, SameConfigurationDifferentNames) {
  // The two clocks are made in either order, so fresh indices differ.
  auto program = parse("async [] (let y = makeClock in drop y); let x = makeClock in drop x");
  State s = load(program);
  while (true) {
    auto ts = enabled(s);
    if (ts.size() >= 2) break;
    ASSERT_FALSE(ts.empty());
    s = step(s, ts.front());
  }
  // Step only the chosen side until it has made its clock, then the other.
  auto drive = [&](State st, bool child_first) {
    for (bool child : {child_first, !child_first}) {
      std::size_t want = st.heap.size() + 1;
      while (st.heap.size() < want) {
        auto ts = enabled(st);
        auto it = std::find_if(ts.begin(), ts.end(), [&](const Transition& t) {
          return (t.label() != "l#0") == child;
        });
        if (it == ts.end()) {
          ADD_FAILURE() << format_state(st);
          return st;
        }
        st = step(st, *it);
      }
    }
    return st;
  };
  State a = drive(s, true);
  State b = drive(s, false);
  EXPECT_FALSE(identical(a, b));
  EXPECT_EQ(canonical_form(a), canonical_form(b));
  EXPECT_EQ(canonicalize(a), canonicalize(b));
}

TEST(Canonical, LoadIsStable) {
  EXPECT_EQ(canonicalize(load(parse("()"))), canonicalize(load(parse("()"))));
}

TEST(Canonical, PhaseMatters) {
  State s;
  s.heap["c#1"] = ClockValue{0, {"l#0"}, {}};
  s.activities["l#0"] = Activity{{{"c#1", 0}}, make_drop(Value::clock("c#1")), {}};
  State t = s;
  t.heap["c#1"].phase = 1;
  t.activities["l#0"].view["c#1"] = 1;
  EXPECT_NE(canonicalize(s), canonicalize(t));
}

TEST(Canonical, IgnoresFreshCounterAndIsRenamingInvariant) {
  State s;
  s.heap["c#4"] = ClockValue{0, {"l#0", "l#7"}, {"l#7"}};
  s.activities["l#0"] = Activity{{{"c#4", 0}}, make_drop(Value::clock("c#4")), {}};
  s.activities["l#7"] = Activity{{{"c#4", 0}}, make_drop(Value::clock("c#4")), {}};
  s.fresh_counter = 8;
  State t;
  t.heap["c#9"] = ClockValue{0, {"l#0", "l#2"}, {"l#2"}};
  t.activities["l#0"] = Activity{{{"c#9", 0}}, make_drop(Value::clock("c#9")), {}};
  t.activities["l#2"] = Activity{{{"c#9", 0}}, make_drop(Value::clock("c#9")), {}};
  t.fresh_counter = 12;
  EXPECT_EQ(canonical_form(s), canonical_form(t));
}
