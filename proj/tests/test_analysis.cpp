#include <doctest.h>

#include <random>

#include "prophecy/analysis/corpus.hpp"
#include "prophecy/analysis/engine.hpp"
#include "prophecy/core/parser.hpp"
#include "prophecy/semantics/extended.hpp"
#include "support/brute_force.hpp"

using namespace prophecy;
using namespace prophecy::analysis;
using core::parse_program;
using core::State;

namespace {

const char* kStraight = "l0: x := 1\nl1: y := x\nl2: halt\nl3: done";
const char* kLoop = "l0: x := 10\nl1: if x <= 0 then l4\nl2: x := x - 1\nl3: goto l1\nl4: halt\nl5: done";
const char* kBranch = "l0: if x <= 0 then l3\nl1: z := y\nl2: goto l4\nl3: z := w\nl4: halt\nl5: done";

AnalysisResults table(const core::Program& p, std::initializer_list<std::pair<const char*, VarSet>> rows) {
  AnalysisResults beta(p);
  for (const auto& [l, s] : rows) beta.at(p.id_of(core::Label{l})) = s;
  return beta;
}

}  // namespace

TEST_CASE("execute_once on a straight-line program") {
  auto p = parse_program(kStraight);
  Session s(p);
  auto r1 = s.execute_once(State{}, 100);
  REQUIRE(std::holds_alternative<Misprediction>(r1));
  CHECK(std::get<Misprediction>(r1).at == 1);
  CHECK(std::get<Misprediction>(r1).cause == Misprediction::Cause::precondition);
  CHECK(s.results().at(1) == VarSet{"x"});

  auto r2 = s.execute_once(State{}, 100);
  REQUIRE(std::holds_alternative<Completed>(r2));
  CHECK(!std::get<Completed>(r2).truncated);
  std::vector<PredictionConstraint> expected = {{1, 0, {"x"}}, {2, 1, {"y"}}, {3, 2, {}}};
  CHECK(s.constraints() == expected);
  CHECK(s.stats() == RunStats{2, 1, 0});
}

TEST_CASE("execute_once without reads completes at once") {
  auto p = parse_program("l0: x := 1\nl1: skip\nl2: goto l3\nl3: halt\nl4: done");
  Session s(p);
  CHECK(std::holds_alternative<Completed>(s.execute_once(State{}, 100)));
}

TEST_CASE("execute_once separates program errors from mispredictions") {
  auto p = parse_program("l0: y := x\nl1: halt\nl2: done");
  Session s(p);
  s.results().at(0) = {"x"};
  auto r = s.execute_once(State{}, 100);
  REQUIRE(std::holds_alternative<ProgramFailure>(r));
  CHECK(std::get<ProgramFailure>(r).stuck.undefined_variable == "x");

  auto c = analyze_concrete(p, State{});
  CHECK(c.status == ConcreteAnalysis::Status::program_error);
  auto g = analyze_concrete(parse_program("l0: goto l0\nl1: done"), State{}, EngineOptions{50, false});
  CHECK(g.status == ConcreteAnalysis::Status::truncated);
}

TEST_CASE("solve") {
  SUBCASE("direct update") {
    auto p = parse_program("l0: skip\nl1: skip\nl2: done");
    Session s(p);
    s.add_constraint(0, 1);
    s.results().at(1) = {"x"};
    s.solve(1);
    CHECK(s.results().at(0) == VarSet{"x"});
  }
  SUBCASE("absorbed by the assignment") {
    auto p = parse_program("l0: x := 1\nl1: skip\nl2: done");
    Session s(p);
    s.add_constraint(0, 1);
    s.results().at(1) = {"x"};
    s.solve(1);
    CHECK(s.results().at(0).empty());
  }
  SUBCASE("chain") {
    auto p = parse_program("l0: skip\nl1: skip\nl2: skip\nl3: done");
    Session s(p);
    s.add_constraint(0, 1);
    s.add_constraint(1, 2);
    CHECK(!s.add_constraint(1, 2));
    s.results().at(2) = {"x"};
    s.solve(2);
    CHECK(s.results().at(1) == VarSet{"x"});
    CHECK(s.results().at(0) == VarSet{"x"});
  }
}

TEST_CASE("analyze_concrete examples") {
  auto p = parse_program(kStraight);
  auto a = analyze_concrete(p, State{});
  CHECK(a.status == ConcreteAnalysis::Status::converged);
  CHECK(a.beta == table(p, {{"l1", {"x"}}}));
  CHECK(a.stats.runs == 2);

  auto q = parse_program(kLoop);
  auto b = analyze_concrete(q, State{});
  CHECK(b.beta == table(q, {{"l1", {"x"}}, {"l2", {"x"}}, {"l3", {"x"}}}));
  CHECK(b.stats == RunStats{4, 2, 1});
  CHECK(b.stats.runs == b.stats.mispredictions + b.stats.constraint_repairs + 1);

  auto r = analyze_concrete(parse_program("l0: x := 1\nl1: goto l2\nl2: halt\nl3: done"), State{});
  CHECK(r.stats.runs == 1);
  CHECK(r.beta == AnalysisResults(4));
}

TEST_CASE("strict mode leaves the back edge unrepaired") {
  auto q = parse_program(kLoop);
  auto b = analyze_concrete(q, State{}, EngineOptions{10000, true});
  CHECK(b.status == ConcreteAnalysis::Status::converged);
  CHECK(b.stats == RunStats{3, 2, 0});
  CHECK(b.beta == table(q, {{"l1", {"x"}}, {"l2", {"x"}}}));
  auto progress = semantics::check_progress(q, b.beta, State{}, 10000);
  CHECK(!progress.passed);
  REQUIRE(progress.finding);
  CHECK(progress.finding->kind == semantics::Finding::Kind::prediction);
  CHECK(progress.finding->label == 3);
  CHECK(*progress.finding->successor == 1);
  CHECK(progress.finding->witness == VarSet{"x"});
}

TEST_CASE("all-paths examples") {
  auto p = parse_program(kBranch);
  auto beta = analyze_all_paths(p);
  CHECK(beta == table(p, {{"l0", {"w", "x", "y"}}, {"l1", {"y"}}, {"l3", {"w"}}}));
  CHECK(live_variables_oracle(p) == beta);

  auto s = parse_program(kStraight);
  CHECK(analyze_all_paths(s) == analyze_concrete(s, State{}).beta);

  auto u = parse_program("l0: goto l2\nl1: y := q\nl2: halt\nl3: done");
  CHECK(analyze_all_paths(u).at(1).empty());
  CHECK(live_variables_oracle(u).at(1) == VarSet{"q"});
  CHECK(equal_on_reachable(u, analyze_all_paths(u), live_variables_oracle(u)));
}

TEST_CASE("oracle examples") {
  auto q = parse_program(kLoop);
  CHECK(live_variables_oracle(q) == analyze_concrete(q, State{}).beta);
  auto r = parse_program("l0: x := 1\nl1: skip\nl2: halt\nl3: done");
  CHECK(live_variables_oracle(r) == AnalysisResults(4));
}

TEST_CASE("property: all-paths equals the oracle on random programs") {
  std::mt19937_64 rng(1);
  for (int n = 0; n < 300; ++n) {
    auto p = random_program(rng);
    CHECK(equal_on_reachable(p, analyze_all_paths(p), live_variables_oracle(p)));
  }
}

TEST_CASE("property: concrete beta passes both checkers") {
  std::mt19937_64 rng(2);
  auto cases = terminating_corpus(rng, 100, 10000);
  for (const auto& c : cases) {
    auto a = analyze_concrete(c.program, c.initial);
    REQUIRE(a.status == ConcreteAnalysis::Status::converged);
    CHECK(semantics::check_progress(c.program, a.beta, c.initial, 10000).passed);
    CHECK(semantics::check_preservation(c.program, a.beta, c.initial, 10000).passed);
    // the executed path is a subset of all paths
    CHECK(a.beta.below(live_variables_oracle(c.program)));
  }
}

TEST_CASE("property: monotone convergence within the bound") {
  std::mt19937_64 rng(3);
  auto cases = terminating_corpus(rng, 60, 10000);
  for (const auto& c : cases) {
    Session s(c.program);
    AnalysisResults previous(c.program);
    for (;;) {
      auto r = s.execute_once(c.initial, 10000);
      CHECK(previous.below(s.results()));
      previous = s.results();
      if (!std::holds_alternative<Misprediction>(r)) break;
    }
    CHECK(s.stats().mispredictions + s.stats().constraint_repairs <= misprediction_bound(c.program));
    CHECK(s.stats().runs == s.stats().mispredictions + s.stats().constraint_repairs + 1);
  }
}

TEST_CASE("property: determinism") {
  std::mt19937_64 rng(4);
  auto cases = terminating_corpus(rng, 40, 10000);
  for (const auto& c : cases) {
    auto a = analyze_concrete(c.program, c.initial);
    auto b = analyze_concrete(c.program, c.initial);
    CHECK(a.beta == b.beta);
    CHECK(a.stats == b.stats);
    CHECK(analyze_all_paths(c.program) == analyze_all_paths(c.program));
  }
}

TEST_CASE("leastness on small exhaustive families") {
  for (std::size_t k = 1; k <= 2; ++k) {
    for (const auto& p : enumerate_programs(k)) {
      auto beta = analyze_all_paths(p);
      auto sep = testing::check_leastness(p, beta);
      auto joint = testing::check_leastness_joint(p, beta);
      CHECK_MESSAGE(sep.ok(), core::print_program(p), sep.detail);
      CHECK_MESSAGE(joint.ok(), core::print_program(p), joint.detail);
    }
  }
}

TEST_CASE("leastness brute force rejects a non-least assignment") {
  auto q = parse_program(kLoop);
  auto beta = analyze_all_paths(q);
  CHECK(testing::check_leastness(q, beta).ok());
  auto bigger = beta;
  bigger.at(0).insert("x");
  auto r = testing::check_leastness(q, bigger);
  CHECK(r.satisfies);
  CHECK(!r.minimal);
  CHECK(!testing::check_leastness_joint(q, bigger).minimal);
  auto smaller = beta;
  smaller.at(3).clear();
  CHECK(!testing::check_leastness(q, smaller).satisfies);
}

TEST_CASE("enumerated family sizes") {
  CHECK(enumerate_programs(1).size() == 3 + 9 + 3 * 3 + 3 + 1);
  CHECK(enumerate_loop_family().size() == 46656);
}

TEST_CASE("parallel corpus verification matches the serial reference") {
  std::mt19937_64 rng(9);
  auto cases = terminating_corpus(rng, 80, 10000);
  auto serial = verify_corpus(cases, 10000, Execution::serial);
  auto parallel = verify_corpus(cases, 10000, Execution::parallel);
  CHECK(serial == parallel);
  for (const auto& v : serial) CHECK_MESSAGE(v.ok(), v.detail);
}
