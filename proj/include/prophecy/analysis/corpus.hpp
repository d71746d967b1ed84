#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "prophecy/core/semantics.hpp"

namespace prophecy::analysis {

struct GeneratorOptions {
  std::size_t max_commands = 25;  // including the trailing halt/done pair
  std::size_t max_variables = 6;
};

/// A random well-formed program: a body of assignments, conditional branches
/// (forward and backward), gotos and skips, closed by `halt` / `done`.
core::Program random_program(std::mt19937_64& rng, const GeneratorOptions& opts = {});

/// Every variable of `p` bound to a small random integer.
core::State random_state(std::mt19937_64& rng, const core::Program& p);

/// All programs `body; halt; done` whose body has exactly `body_length`
/// commands drawn from
///   v := 1, v := w, if v <= 0 then L, goto L, skip
/// over v, w in {x, y, z} and L ranging over every label.
std::vector<core::Program> enumerate_programs(std::size_t body_length);

/// All 8-label programs whose six body commands come from
///   x := y, y := z, z := x, x := 1, if x <= 0 then l0, goto l1
std::vector<core::Program> enumerate_loop_family();

enum class Execution { serial, parallel };

struct CorpusCase {
  core::Program program;
  core::State initial;
};

struct Verdict {
  bool oracle_match = false;
  bool concrete_converged = false;
  bool progress = false;
  bool preservation = false;
  std::size_t runs = 0;
  std::string detail;

  bool ok() const { return oracle_match && concrete_converged && progress && preservation; }
  friend bool operator==(const Verdict&, const Verdict&) = default;
};

/// For each case: all-paths beta against the classical oracle, then the
/// concrete reexecution beta through the Progress and Preservation checkers.
/// The parallel path splits cases across OpenMP threads; serial is the
/// reference it must agree with.
std::vector<Verdict> verify_corpus(std::span<const CorpusCase> cases, std::size_t max_steps, Execution mode);

/// Draws random programs and seeded states until `count` of them complete
/// within `max_steps`.
std::vector<CorpusCase> terminating_corpus(std::mt19937_64& rng, std::size_t count, std::size_t max_steps,
                                           const GeneratorOptions& opts = {});

}  // namespace prophecy::analysis
