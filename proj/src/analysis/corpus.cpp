#include "prophecy/analysis/corpus.hpp"

#include <array>

#include "prophecy/analysis/engine.hpp"
#include "prophecy/semantics/extended.hpp"

namespace prophecy::analysis {

namespace {

using core::AExp;
using core::BExp;
using core::Command;
using core::Label;
using core::LabeledCommand;
using core::Program;

constexpr std::array<const char*, 6> kVarNames = {"x", "y", "z", "u", "v", "w"};

std::size_t pick(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

Label label_at(std::size_t i) { return Label{"l" + std::to_string(i)}; }

AExp random_aexp(std::mt19937_64& rng, std::size_t nvars, int depth) {
  if (depth == 0 || pick(rng, 0, 2) == 0) {
    if (pick(rng, 0, 1) == 0) return AExp::lit(static_cast<core::Value>(pick(rng, 0, 8)) - 3);
    return AExp::var(kVarNames[pick(rng, 0, nvars - 1)]);
  }
  static constexpr std::array<AExp::Kind, 3> kOps = {AExp::Kind::add, AExp::Kind::sub, AExp::Kind::mul};
  const auto op = kOps[pick(rng, 0, 2)];
  AExp l = random_aexp(rng, nvars, depth - 1);
  AExp r = random_aexp(rng, nvars, depth - 1);
  return AExp::binary(op, std::move(l), std::move(r));
}

BExp random_bexp(std::mt19937_64& rng, std::size_t nvars, int depth) {
  const std::size_t r = pick(rng, 0, 9);
  if (depth > 0 && r == 0) return BExp::negate(random_bexp(rng, nvars, depth - 1));
  if (depth > 0 && r == 1) {
    BExp a = random_bexp(rng, nvars, depth - 1);
    BExp b = random_bexp(rng, nvars, depth - 1);
    return pick(rng, 0, 1) ? BExp::conj(std::move(a), std::move(b)) : BExp::disj(std::move(a), std::move(b));
  }
  if (r == 2) return BExp::constant(pick(rng, 0, 1) == 1);
  AExp a = random_aexp(rng, nvars, 1);
  AExp b = random_aexp(rng, nvars, 1);
  return pick(rng, 0, 2) == 0 ? BExp::eq(std::move(a), std::move(b)) : BExp::le(std::move(a), std::move(b));
}

Program from_body(std::vector<Command> body) {
  std::vector<LabeledCommand> cmds;
  const std::size_t n = body.size() + 2;
  cmds.reserve(n);
  for (std::size_t i = 0; i < body.size(); ++i) cmds.push_back(LabeledCommand{label_at(i), std::move(body[i])});
  cmds.push_back(LabeledCommand{label_at(n - 2), core::Halt{}});
  cmds.push_back(LabeledCommand{label_at(n - 1), core::Done{}});
  return Program(std::move(cmds));
}

std::vector<Program> cartesian(const std::vector<Command>& alphabet, std::size_t length) {
  std::vector<Program> out;
  std::vector<std::size_t> digits(length, 0);
  for (;;) {
    std::vector<Command> body;
    body.reserve(length);
    for (std::size_t d : digits) body.push_back(alphabet[d]);
    out.push_back(from_body(std::move(body)));
    std::size_t i = 0;
    while (i < length && ++digits[i] == alphabet.size()) digits[i++] = 0;
    if (i == length) break;
  }
  return out;
}

Verdict verify_one(const CorpusCase& c, std::size_t max_steps) {
  Verdict v;
  try {
    const Program& p = c.program;
    v.oracle_match = equal_on_reachable(p, analyze_all_paths(p), live_variables_oracle(p));
    const ConcreteAnalysis conc = analyze_concrete(p, c.initial, EngineOptions{max_steps, false});
    v.concrete_converged = conc.status == ConcreteAnalysis::Status::converged;
    v.runs = conc.stats.runs;
    const auto progress = semantics::check_progress(p, conc.beta, c.initial, max_steps);
    const auto preservation = semantics::check_preservation(p, conc.beta, c.initial, max_steps);
    v.progress = progress.passed;
    v.preservation = preservation.passed;
    if (!v.oracle_match) v.detail = "all-paths result differs from the dataflow oracle";
    if (!progress.passed) v.detail = semantics::to_string(p, progress);
    if (!preservation.passed) v.detail = semantics::to_string(p, preservation);
    if (!v.concrete_converged) v.detail = std::string("concrete analysis ") + to_string(conc.status);
  } catch (const std::exception& e) {
    v.detail = e.what();
  }
  return v;
}

}  // namespace

Program random_program(std::mt19937_64& rng, const GeneratorOptions& opts) {
  const std::size_t nvars = pick(rng, 1, std::min<std::size_t>(opts.max_variables, kVarNames.size()));
  const std::size_t body_len = pick(rng, 1, std::max<std::size_t>(opts.max_commands, 3) - 2);
  const std::size_t n = body_len + 2;
  std::vector<Command> body;
  body.reserve(body_len);
  for (std::size_t i = 0; i < body_len; ++i) {
    const std::size_t r = pick(rng, 0, 99);
    if (r < 55) {
      body.push_back(core::Assign{kVarNames[pick(rng, 0, nvars - 1)], random_aexp(rng, nvars, 2)});
    } else if (r < 78) {
      body.push_back(core::If{random_bexp(rng, nvars, 1), label_at(pick(rng, 0, n - 1))});
    } else if (r < 88) {
      body.push_back(core::Goto{label_at(pick(rng, 0, n - 1))});
    } else {
      body.push_back(core::Skip{});
    }
  }
  return from_body(std::move(body));
}

core::State random_state(std::mt19937_64& rng, const Program& p) {
  core::State s;
  for (const auto& v : p.variables()) s.set(v, static_cast<core::Value>(pick(rng, 0, 20)) - 5);
  return s;
}

std::vector<Program> enumerate_programs(std::size_t body_length) {
  static constexpr std::array<const char*, 3> kVars = {"x", "y", "z"};
  const std::size_t n = body_length + 2;
  std::vector<Command> alphabet;
  for (const char* v : kVars) alphabet.push_back(core::Assign{v, AExp::lit(1)});
  for (const char* v : kVars) {
    for (const char* w : kVars) alphabet.push_back(core::Assign{v, AExp::var(w)});
  }
  for (const char* v : kVars) {
    for (std::size_t t = 0; t < n; ++t) {
      alphabet.push_back(core::If{BExp::le(AExp::var(v), AExp::lit(0)), label_at(t)});
    }
  }
  for (std::size_t t = 0; t < n; ++t) alphabet.push_back(core::Goto{label_at(t)});
  alphabet.push_back(core::Skip{});
  return cartesian(alphabet, body_length);
}

std::vector<Program> enumerate_loop_family() {
  const std::vector<Command> alphabet = {
      core::Assign{"x", AExp::var("y")},
      core::Assign{"y", AExp::var("z")},
      core::Assign{"z", AExp::var("x")},
      core::Assign{"x", AExp::lit(1)},
      core::If{BExp::le(AExp::var("x"), AExp::lit(0)), label_at(0)},
      core::Goto{label_at(1)},
  };
  return cartesian(alphabet, 6);
}

std::vector<Verdict> verify_corpus(std::span<const CorpusCase> cases, std::size_t max_steps, Execution mode) {
  std::vector<Verdict> out(cases.size());
  const auto n = static_cast<std::ptrdiff_t>(cases.size());
  if (mode == Execution::serial) {
    for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = verify_one(cases[i], max_steps);
    return out;
  }
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = verify_one(cases[i], max_steps);
  return out;
}

std::vector<CorpusCase> terminating_corpus(std::mt19937_64& rng, std::size_t count, std::size_t max_steps,
                                           const GeneratorOptions& opts) {
  std::vector<CorpusCase> out;
  while (out.size() < count) {
    Program p = random_program(rng, opts);
    core::State s = random_state(rng, p);
    const auto t = core::run_trace(p, s, max_steps);
    if (t.kind == core::Trace::Kind::complete) out.push_back(CorpusCase{std::move(p), std::move(s)});
  }
  return out;
}

}  // namespace prophecy::analysis
