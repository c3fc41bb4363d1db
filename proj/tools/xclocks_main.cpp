// xclocks: check, run, explore and compare X10|clocks programs.
//
// Exit codes: 0 ok, 1 type error, 2 run-time error (or failed oracle or
// backend divergence), 3 deadlock, 4 step or state limit, 5 usage, parse
// or replay mismatch.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "xclocks/counter.hpp"
#include "xclocks/explore.hpp"
#include "xclocks/runtime.hpp"
#include "xclocks/statecheck.hpp"
#include "xclocks/syntax.hpp"
#include "xclocks/trace_io.hpp"
#include "xclocks/typecheck.hpp"

namespace {

using namespace xclocks;

enum Exit : int { Ok = 0, TypeFailure = 1, RunError = 2, Deadlock = 3, Limit = 4, Usage = 5 };

struct Failure {
  int code;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << path << ": cannot open\n";
    throw Failure{Usage};
  }
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

ExprPtr load_program(const std::string& path) {
  std::string src = read_file(path);
  try {
    return parse(src);
  } catch (const SyntaxError& e) {
    std::cerr << path << ":" << e.what() << "\n";
  } catch (const ReservedNameError& e) {
    std::cerr << path << ":" << e.what() << "\n";
  }
  throw Failure{Usage};
}

void report_type_error(const std::string& path, const TypeErrorReport& r) {
  std::cerr << path << ":" << r.location.line << ":" << r.location.column << ": error["
            << to_string(r.kind) << "]: " << r.message << "\n";
}

void require_typed(const std::string& path, const ExprPtr& program) {
  auto outcome = check_program(*program);
  if (!outcome.ok()) {
    report_type_error(path, *outcome.error);
    throw Failure{TypeFailure};
  }
}

void print_activities(std::ostream& os, const State& s) {
  for_each_activity(s.activities, [&](const Path& path, const Activity& a, const auto*) {
    const Expr* site = redex_site(*a.expr);
    os << "  " << format_path(path) << " {";
    bool first = true;
    for (const auto& [c, p] : a.view) {
      os << (first ? "" : ",") << c << ":" << p;
      first = false;
    }
    os << "} at " << (site != nullptr ? format(*site) : format(*a.expr)) << "\n";
  });
}

void print_trace(std::ostream& os, const Trace& trace) {
  for (const auto& rec : trace) {
    os << "  " << rec.index << ": " << to_string(rec.transition);
    for (const auto& n : rec.fresh) os << " +" << n;
    os << "\n";
  }
}

int verdict_code(const Verdict& v) {
  return std::visit(
      [](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Finished>) return int{Ok};
        if constexpr (std::is_same_v<T, Errored>) return int{RunError};
        if constexpr (std::is_same_v<T, Deadlocked>) return int{Deadlock};
        return int{Limit};
      },
      v);
}

std::unique_ptr<Scheduler> make_scheduler(const std::string& policy, std::uint64_t seed) {
  if (policy == "random") return std::make_unique<RandomScheduler>(seed);
  return std::make_unique<FirstScheduler>();
}

int cmd_check(const std::string& path, bool annotate) {
  auto program = load_program(path);
  auto outcome = check_program(*program);
  if (annotate) {
    for (const auto& a : outcome.annotations) std::cout << render_annotation(a) << "\n";
  }
  if (!outcome.ok()) {
    report_type_error(path, *outcome.error);
    return TypeFailure;
  }
  std::cout << path << ": ok : " << to_string(outcome.result->type) << "\n";
  return Ok;
}

struct RunOptions {
  std::string policy = "first";
  std::uint64_t seed = 0;
  std::size_t max_steps = 10000;
  std::string trace_out;
  bool typed_exec = false;
  bool unchecked = false;
};

int cmd_run(const std::string& path, const RunOptions& o) {
  auto program = load_program(path);
  if (!o.unchecked) require_typed(path, program);
  State initial = load(program);

  std::optional<std::string> oracle_failure;
  StepObserver observer;
  if (o.typed_exec) {
    auto check = [&](const State& s, const std::string& where) {
      if (oracle_failure) return;
      auto typing = typecheck_state(s);
      if (!typing) oracle_failure = where + ": " + typing.diagnostic;
    };
    check(initial, "initial state");
    observer = [&](const State&, const Transition& t, const State& next) {
      check(next, "after " + to_string(t));
    };
  }
  auto scheduler = make_scheduler(o.policy, o.seed);
  auto result = run(initial, *scheduler, o.max_steps, observer);

  if (!o.trace_out.empty()) {
    std::ofstream out(o.trace_out);
    if (!out) {
      std::cerr << o.trace_out << ": cannot write\n";
      return Usage;
    }
    write_trace(out, result.trace);
  }
  std::cout << to_string(result.verdict) << " after " << result.trace.size() << " steps\n";
  if (!std::holds_alternative<Finished>(result.verdict)) print_activities(std::cout, result.final_state);
  if (oracle_failure) {
    std::cerr << "typed execution failed: " << *oracle_failure << "\n";
    return RunError;
  }
  return verdict_code(result.verdict);
}

int cmd_explore(const std::string& path, std::size_t max_states, std::size_t max_depth,
                bool unchecked) {
  auto program = load_program(path);
  if (!unchecked) require_typed(path, program);
  ExploreOptions options;
  options.max_states = max_states;
  options.max_depth = max_depth;
  auto report = explore(program, options);

  std::cout << "states: " << report.states_visited << "\n"
            << "transitions: " << report.transitions << "\n"
            << "terminal states: " << report.terminal_states.size() << "\n"
            << "error states: " << report.error_states << "\n"
            << "deadlock states: " << report.deadlock_states << "\n";
  if (report.truncated) std::cout << "truncated: bounds reached\n";
  if (report.digest_collisions != 0) {
    std::cout << "digest collisions: " << report.digest_collisions << "\n";
  }
  for (const auto& w : report.errors) {
    std::cout << "\n" << to_string(w.error) << " (" << w.trace.size() << " steps)\n";
    print_trace(std::cout, w.trace);
    print_activities(std::cout, w.state);
  }
  if (!report.deadlocks.empty()) {
    const auto& d = report.deadlocks.front();
    std::cout << "\ndeadlock (" << d.trace.size() << " steps)\n";
    print_trace(std::cout, d.trace);
    print_activities(std::cout, d.state);
  }
  if (report.error_states != 0) return RunError;
  if (report.deadlock_states != 0) return Deadlock;
  if (report.truncated) return Limit;
  return Ok;
}

int cmd_equiv(const std::string& path, std::size_t seeds, std::size_t max_steps,
              bool unchecked) {
  auto program = load_program(path);
  if (!unchecked) require_typed(path, program);
  std::size_t compared = 0;
  auto one = [&](Scheduler& sched, const std::string& name) {
    auto r = lockstep_compare(program, sched, max_steps);
    ++compared;
    if (!r.equal) {
      std::cout << "divergence under " << name << ": " << r.divergence << "\n";
      return false;
    }
    return true;
  };
  FirstScheduler first;
  if (!one(first, "first")) return RunError;
  for (std::size_t seed = 0; seed < seeds; ++seed) {
    RandomScheduler sched(seed);
    if (!one(sched, "random seed " + std::to_string(seed))) return RunError;
  }
  std::cout << "equivalent under " << compared << " schedules\n";
  return Ok;
}

int cmd_replay(const std::string& path, const std::string& trace_in) {
  auto program = load_program(path);
  std::ifstream in(trace_in);
  if (!in) {
    std::cerr << trace_in << ": cannot open\n";
    return Usage;
  }
  try {
    auto trace = read_trace(in);
    State s = replay(load(program), trace);
    std::cout << "replayed " << trace.size() << " steps\n" << format_state(s) << "\n";
    if (auto v = classify_final(s)) {
      std::cout << to_string(*v) << "\n";
      return verdict_code(*v);
    }
    return Ok;
  } catch (const TraceFormatError& e) {
    std::cerr << trace_in << ": " << e.what() << "\n";
  } catch (const ReplayMismatch& e) {
    std::cerr << "replay mismatch: " << e.what() << "\n";
  }
  return Usage;
}

int cmd_fmt(const std::string& path) {
  std::cout << format(*load_program(path)) << "\n";
  return Ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"X10|clocks checker, interpreter and explorer", "xclocks"};
  app.require_subcommand(1);

  std::string file;
  bool annotate = false;
  auto* check = app.add_subcommand("check", "typecheck a program");
  check->add_option("file", file, "source file")->required();
  check->add_flag("--annotate", annotate, "print (Gamma, R, Q) at each program point");

  RunOptions run_opts;
  auto* run_cmd = app.add_subcommand("run", "execute a program");
  run_cmd->add_option("file", file, "source file")->required();
  run_cmd->add_option("--policy", run_opts.policy, "scheduler")
      ->check(CLI::IsMember({"first", "random"}));
  run_cmd->add_option("--seed", run_opts.seed, "seed for the random policy");
  run_cmd->add_option("--max-steps", run_opts.max_steps, "step bound")->check(CLI::PositiveNumber);
  run_cmd->add_option("--trace", run_opts.trace_out, "write the trace to this file");
  run_cmd->add_flag("--typed-exec", run_opts.typed_exec, "check state typing after every step");
  run_cmd->add_flag("--unchecked", run_opts.unchecked, "skip the static check");

  std::size_t max_states = 100000;
  std::size_t max_depth = 10000;
  bool unchecked = false;
  auto* explore_cmd = app.add_subcommand("explore", "explore every interleaving");
  explore_cmd->add_option("file", file, "source file")->required();
  explore_cmd->add_option("--max-states", max_states)->check(CLI::PositiveNumber);
  explore_cmd->add_option("--max-depth", max_depth)->check(CLI::PositiveNumber);
  explore_cmd->add_flag("--unchecked", unchecked, "skip the static check");

  std::size_t seeds = 100;
  std::size_t equiv_steps = 10000;
  auto* equiv = app.add_subcommand("equiv", "compare the set and counter clock backends");
  equiv->add_option("file", file, "source file")->required();
  equiv->add_option("--seeds", seeds, "number of random schedules");
  equiv->add_option("--max-steps", equiv_steps)->check(CLI::PositiveNumber);
  equiv->add_flag("--unchecked", unchecked, "skip the static check");

  std::string trace_in;
  auto* replay_cmd = app.add_subcommand("replay", "replay a recorded trace");
  replay_cmd->add_option("file", file, "source file")->required();
  replay_cmd->add_option("--trace", trace_in, "trace file")->required();

  auto* fmt = app.add_subcommand("fmt", "pretty-print a program");
  fmt->add_option("file", file, "source file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return Usage;
  }

  try {
    if (*check) return cmd_check(file, annotate);
    if (*run_cmd) return cmd_run(file, run_opts);
    if (*explore_cmd) return cmd_explore(file, max_states, max_depth, unchecked);
    if (*equiv) return cmd_equiv(file, seeds, equiv_steps, unchecked);
    if (*replay_cmd) return cmd_replay(file, trace_in);
    if (*fmt) return cmd_fmt(file);
  } catch (const Failure& f) {
    return f.code;
  }
  return Usage;
}
