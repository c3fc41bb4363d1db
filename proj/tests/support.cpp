#include "support.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace xclocks::fixtures {

std::string corpus_path(const std::string& name) {
  return std::string(XCLOCKS_CORPUS_DIR) + "/" + name + ".xc";
}

std::string read_corpus(const std::string& name) {
  std::ifstream in(corpus_path(name));
  if (!in) throw std::runtime_error("missing corpus file " + name);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

ExprPtr corpus_program(const std::string& name) { return parse(read_corpus(name)); }

const std::vector<std::string>& corpus_names() {
  static const std::vector<std::string> names{"ex1", "ex2", "ex3", "ex4",
                                              "ex5", "ex6", "ex7", "syntax"};
  return names;
}

const std::vector<std::string>& typed_corpus_names() {
  static const std::vector<std::string> names{"ex1", "ex2", "ex3", "ex7", "syntax"};
  return names;
}

namespace {

struct HeldClock {
  std::vector<std::string> names;  // aliases in scope
  bool resumed = false;
};

class Generator {
 public:
  Generator(std::mt19937_64& rng, int max_depth) : rng_(rng), max_depth_(max_depth) {}

  std::string block(std::vector<HeldClock> held, int depth) {
    std::vector<std::string> stmts;
    int budget = pick(1, 4);
    for (int i = 0; i < budget; ++i) {
      int choice = pick(0, 9);
      if (choice <= 1 && !held.empty()) {
        auto& c = held[pick_index(held.size())];
        if (c.resumed) continue;
        stmts.push_back("resume " + name_of(c));
        c.resumed = true;
      } else if (choice == 2 && !held.empty()) {
        for (auto& c : held) {
          if (!c.resumed) stmts.push_back("resume " + name_of(c));
          c.resumed = false;
        }
        stmts.push_back("next");
      } else if (choice == 3 && !held.empty()) {
        std::size_t k = pick_index(held.size());
        stmts.push_back("drop " + name_of(held[k]));
        held.erase(held.begin() + static_cast<std::ptrdiff_t>(k));
      } else if (choice <= 5 && depth < max_depth_) {
        std::vector<HeldClock> passed;
        std::vector<std::string> args;
        for (const auto& c : held) {
          if (pick(0, 1) == 1) {
            passed.push_back(HeldClock{{name_of(c)}, c.resumed});
            args.push_back(passed.back().names.front());
          }
        }
        std::string list;
        for (const auto& a : args) list += (list.empty() ? "" : ", ") + a;
        stmts.push_back("async [" + list + "] (" + block(std::move(passed), depth + 1) + ")");
      } else if (choice == 6 && depth < max_depth_) {
        stmts.push_back("finish (" + block({}, depth + 1) + ")");
      } else if (choice == 7 && depth < max_depth_) {
        std::string x = fresh_var();
        held.push_back(HeldClock{{x}, false});
        stmts.push_back("let " + x + " = makeClock in (" + block(std::move(held), depth + 1) + ")");
        return join(stmts);
      } else if (choice == 8 && depth < max_depth_ && !held.empty()) {
        std::string y = fresh_var();
        auto& c = held[pick_index(held.size())];
        std::string src = name_of(c);
        c.names.push_back(y);
        stmts.push_back("let " + y + " = " + src + " in (" + block(std::move(held), depth + 1) +
                        ")");
        return join(stmts);
      } else {
        stmts.push_back("()");
      }
    }
    for (const auto& c : held) stmts.push_back("drop " + name_of(c));
    return join(stmts);
  }

 private:
  static std::string join(const std::vector<std::string>& stmts) {
    if (stmts.empty()) return "()";
    std::string out;
    for (const auto& s : stmts) out += (out.empty() ? "" : "; ") + s;
    return out;
  }

  std::string name_of(const HeldClock& c) { return c.names[pick_index(c.names.size())]; }

  std::string fresh_var() { return "v" + std::to_string(counter_++); }

  int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  std::size_t pick_index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_);
  }

  std::mt19937_64& rng_;
  int max_depth_;
  int counter_ = 0;
};

}  // namespace

/// Per-step structural checks; returns a description of the first problem.
std::optional<std::string> step_violation(const State& before, const Transition& t,
                                          const State& after) {
  for (const auto& [c, v] : after.heap) {
    if (!std::includes(v.registered.begin(), v.registered.end(), v.quiescent.begin(),
                       v.quiescent.end())) {
      return "Q not within R for " + c;
    }
    if (v.registered.empty()) return "empty registration for " + c;
  }
  std::optional<std::string> lag;
  for_each_activity(after.activities, [&](const Path& path, const Activity& a, const auto*) {
    for (const auto& [c, local] : a.view) {
      auto it = after.heap.find(c);
      if (it == after.heap.end()) continue;
      if (it->second.phase != local && it->second.phase != local + 1) {
        lag = "phase lag at " + format_path(path) + " on " + c;
      }
    }
  });
  if (lag) return lag;
  for (const auto& [c, v] : before.heap) {
    bool gone = !after.heap.contains(c);
    bool last_drop = t.rule == Rule::Drop && v.registered == std::set<Name>{t.label()} &&
                     !find_activity(after.activities, t.path)->view.contains(c);
    if (gone != last_drop) return "deallocation mismatch for " + c;
  }
  return std::nullopt;
}

std::string generate_program(std::mt19937_64& rng, int max_depth) {
  return Generator(rng, max_depth).block({}, 0);
}

}  // namespace xclocks::fixtures
