#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "xclocks/runtime.hpp"
#include "xclocks/syntax.hpp"

namespace xclocks::fixtures {

std::string corpus_path(const std::string& name);
std::string read_corpus(const std::string& name);
ExprPtr corpus_program(const std::string& name);

/// The eight bundled programs, by file stem.
const std::vector<std::string>& corpus_names();
/// The ones the checker accepts.
const std::vector<std::string>& typed_corpus_names();

/// Source text of a random well-typed program. Nesting of let, async and
/// finish is bounded by `max_depth`.
std::string generate_program(std::mt19937_64& rng, int max_depth = 6);

/// Q within R, phase lag of at most one, and deallocation exactly on the
/// last registrant's drop, for one step.
std::optional<std::string> step_violation(const State& before, const Transition& t,
                                          const State& after);

}  // namespace xclocks::fixtures
