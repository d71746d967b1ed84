// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "prophecy/analysis/corpus.hpp"
#include "prophecy/analysis/engine.hpp"
#include "prophecy/cli/cli.hpp"
#include "prophecy/core/parser.hpp"
#include "prophecy/einsum/einsum.hpp"
#include "prophecy/nn/nn.hpp"
#include "prophecy/semantics/extended.hpp"
#include "prophecy/staging/emit.hpp"
#include "support/brute_force.hpp"

using namespace prophecy;

namespace {

constexpr std::size_t kOraclePrograms = 200;
constexpr std::size_t kBisimPrograms = 100;
constexpr std::size_t kMaxSteps = 10000;
constexpr std::size_t kPreservationInputs = 20;
constexpr double kFusionTolerance = 1e-6;
constexpr double kMatmulTolerance = 1e-5;
constexpr int kMaxSize = 64;

const char* kLoop =
    "l0: x := 10\n"
    "l1: if x <= 0 then l4\n"
    "l2: x := x - 1\n"
    "l3: goto l1\n"
    "l4: halt\n"
    "l5: done\n";

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string join(const std::vector<std::string>& v, const std::string& sep) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? sep : "") + v[i];
  return s;
}

std::string set_text(const std::set<std::string>& s) {
  return "{" + join(std::vector<std::string>(s.begin(), s.end()), ",") + "}";
}

Outcome oracle_equivalence() {
  std::mt19937_64 rng(0);
  std::size_t matched = 0, branching = 0;
  for (std::size_t n = 0; n < kOraclePrograms; ++n) {
    auto p = analysis::random_program(rng);
    if (core::print_program(p).find(" if ") != std::string::npos) ++branching;
    if (analysis::equal_on_reachable(p, analysis::analyze_all_paths(p), analysis::live_variables_oracle(p)))
      ++matched;
  }
  return {matched == kOraclePrograms, std::to_string(matched) + "/" + std::to_string(kOraclePrograms) +
                                          " programs equal on reachable labels (" + std::to_string(branching) +
                                          " with branches)"};
}

Outcome bisimulation() {
  std::mt19937_64 rng(0);
  auto cases = analysis::terminating_corpus(rng, kBisimPrograms, kMaxSteps);
  std::size_t ok = 0;
  std::string first;
  for (const auto& c : cases) {
    auto a = analysis::analyze_concrete(c.program, c.initial);
    auto pres = semantics::check_preservation(c.program, a.beta, c.initial, kMaxSteps);
    auto prog = semantics::check_progress(c.program, a.beta, c.initial, kMaxSteps);
    if (a.status == analysis::ConcreteAnalysis::Status::converged && pres.passed && prog.passed) {
      ++ok;
    } else if (first.empty()) {
      first = "; first failure: " + semantics::to_string(c.program, pres.passed ? prog : pres);
    }
  }
  return {ok == cases.size() && cases.size() >= kBisimPrograms,
          std::to_string(ok) + "/" + std::to_string(cases.size()) +
              " terminating programs pass Preservation and Progress" + first};
}

Outcome leastness() {
  std::size_t checked = 0, failed = 0;
  std::string first;
  auto check = [&](const core::Program& p, bool joint) {
    auto beta = analysis::analyze_all_paths(p);
    auto r = joint ? testing::check_leastness_joint(p, beta) : testing::check_leastness(p, beta);
    ++checked;
    if (!r.ok()) {
      ++failed;
      if (first.empty()) first = "; first failure: " + r.detail;
    }
  };
  std::size_t family = 0;
  for (const auto& p : analysis::enumerate_loop_family()) {
    check(p, false);
    ++family;
  }
  std::size_t small = 0;
  for (std::size_t k = 1; k <= 3; ++k)
    for (const auto& p : analysis::enumerate_programs(k)) {
      check(p, false);
      ++small;
      if (k <= 2) check(p, true);
    }
  return {failed == 0, std::to_string(family) + " eight-label programs and " + std::to_string(small) +
                           " programs of up to five labels, " + std::to_string(checked) + " checks, " +
                           std::to_string(failed) + " failures" + first};
}

Outcome strict_gap() {
  auto p = core::parse_program(kLoop);
  const core::State init;
  auto strict = analysis::analyze_concrete(p, init, analysis::EngineOptions{kMaxSteps, true});
  auto progress = semantics::check_progress(p, strict.beta, init, kMaxSteps);
  const bool violation = !progress.passed && progress.finding &&
                         progress.finding->kind == semantics::Finding::Kind::prediction &&
                         progress.finding->label == 3 && progress.finding->successor == 1;

  auto repaired = analysis::analyze_concrete(p, init);
  analysis::AnalysisResults want(p);
  for (core::LabelId l : {1, 2, 3}) want.at(l) = core::VarSet{"x"};
  const bool fixpoint = repaired.beta == want && repaired.stats.runs == 4;
  return {violation && fixpoint, "strict: " + semantics::to_string(p, progress) +
                                     "; default: runs=" + std::to_string(repaired.stats.runs) +
                                     (fixpoint ? ", l1-l3 -> {x}" : ", unexpected beta")};
}

Outcome einsum_movement() {
  auto r = einsum::build_matmul_benchmark(32, 32, 32);
  const auto& m = r.movement;
  const std::set<std::string> device{"x", "y", "z"};
  const std::set<std::string> in{"x", "y"}, out{"z"};
  const auto& st = r.staged.stats;
  const bool pass = r.tensors.size() == 6 && m.device_allocated == device && m.copied_in == in &&
                    m.copied_out == out && m.unified_allocated.empty() && st.runs == st.merges + 1;
  auto d = einsum::derivation(r);
  return {pass, "device " + std::to_string(m.device_allocated.size()) + "/" + std::to_string(r.tensors.size()) +
                    " " + set_text(m.device_allocated) + ", in " + set_text(m.copied_in) + " (A,B), out " +
                    set_text(m.copied_out) + " (C); runs " + std::to_string(st.runs) +
                    ": " + join(d, "; ")};
}

Outcome conv_relu() {
  auto r = nn::build_conv_relu_benchmark(1024, 21);
  const auto& st = r.staged.stats;
  const bool pass = st.runs == 4 && r.loop_nests == std::vector<int>{3, 1};
  return {pass, "runs " + std::to_string(st.runs) + ", loop nests: divergent part " +
                    std::to_string(r.loop_nests.at(0)) + " (conv + 2 relu), uniform part " +
                    std::to_string(r.loop_nests.at(1)) + " (fused)"};
}

Outcome semantic_preservation() {
  std::mt19937_64 rng(0);
  auto draw = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  double worst_fusion = 0.0, worst_matmul = 0.0;
  std::size_t strategy_mismatch = 0;

  for (std::size_t t = 0; t < kPreservationInputs; ++t) {
    const std::uint64_t seed = rng();
    const int M = t == 0 ? kMaxSize : draw(1, kMaxSize / 2);
    const int N = t == 0 ? kMaxSize : draw(1, kMaxSize / 2);
    const int O = t == 0 ? kMaxSize : draw(1, kMaxSize / 2);
    einsum::BenchmarkOptions eo;
    eo.iterations = 1;
    eo.grid = {draw(1, 8), draw(1, 16)};
    std::vector<float> reference;
    staging::InterpInputs in;
    for (auto s : {einsum::Strategy::prophecy, einsum::Strategy::copy_all, einsum::Strategy::unified}) {
      eo.strategy = s;
      auto r = einsum::build_matmul_benchmark(M, N, O, eo);
      if (s == einsum::Strategy::prophecy) in = einsum::random_inputs(r, seed);
      auto got = staging::interpret_program(r.staged.program, in).buffers.at("arg2");
      if (s == einsum::Strategy::prophecy) {
        reference = got;
        const auto& a = in.buffers.at("arg0");
        const auto& b = in.buffers.at("arg1");
        for (int i = 0; i < M; ++i)
          for (int j = 0; j < O; ++j) {
            double want = 0.0;
            for (int k = 0; k < N; ++k) want += double(a[i * N + k]) * double(b[k * O + j]);
            const double err = std::fabs(got[i * O + j] - want) / std::max(1.0, std::fabs(want));
            worst_matmul = std::max(worst_matmul, err);
          }
      } else if (got != reference) {
        ++strategy_mismatch;
      }
    }

    const int size = draw(1, kMaxSize);
    const int filter = draw(1, size);
    nn::ConvReluOptions no;
    no.iterations = 1;
    auto fused = nn::build_conv_relu_benchmark(size, filter, no);
    no.force_unfused = true;
    auto plain = nn::build_conv_relu_benchmark(size, filter, no);
    auto nin = nn::random_inputs(fused, seed, t % 2 == 0);
    auto x = staging::interpret_program(fused.staged.program, nin);
    auto y = staging::interpret_program(plain.staged.program, nin);
    if (x.consumed != y.consumed) worst_fusion = INFINITY;
    for (std::size_t c = 0; c < x.consumed && c < y.consumed; ++c) {
      const auto key = "consumed#" + std::to_string(c);
      const auto& u = x.buffers.at(key);
      const auto& v = y.buffers.at(key);
      for (std::size_t e = 0; e < u.size(); ++e) worst_fusion = std::max(worst_fusion, double(std::fabs(u[e] - v[e])));
    }
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "%zu inputs: fused vs unfused max |diff| %.3g (tol %.0e), strategy mismatches %zu, "
                "matmul vs triple loop max rel err %.3g (tol %.0e)",
                kPreservationInputs, worst_fusion, kFusionTolerance, strategy_mismatch, worst_matmul, kMatmulTolerance);
  return {worst_fusion <= kFusionTolerance && strategy_mismatch == 0 && worst_matmul <= kMatmulTolerance, buf};
}

Outcome determinism() {
  const std::string loop = std::string(PROPHECY_TEST_DATA) + "/loop.prog";
  const std::string branch = std::string(PROPHECY_TEST_DATA) + "/branch.prog";
  const std::vector<std::vector<std::string>> commands = {
      {"analyze", loop, "--check", "--format", "json"},
      {"analyze", loop, "--check", "--strict-paper"},
      {"analyze", branch, "--mode", "all-paths", "--check"},
      {"stage", "--dsl", "einsum-matmul", "--m", "16", "--stats", "--run-interp", "--diff-strategies", "--emit", "-"},
      {"stage", "--dsl", "einsum-matmul", "--m", "8", "--strategy", "copy-all", "--stats", "--emit", "-"},
      {"stage", "--dsl", "einsum-matmul", "--m", "8", "--strategy", "unified", "--stats", "--emit", "-"},
      {"stage", "--dsl", "einsum-matvec", "--m", "12", "--n", "7", "--stats", "--run-interp", "--emit", "-"},
      {"stage", "--dsl", "nn-conv-relu", "--size", "64", "--stats", "--run-interp", "--diff-strategies", "--emit", "-"},
      {"verify", "--programs", "30", "--seed", "5", "--format", "json"},
  };
  std::size_t identical = 0;
  for (const auto& c : commands) {
    std::ostringstream a, b, ea, eb;
    const int ca = cli::run(c, a, ea);
    const int cb = cli::run(c, b, eb);
    if (ca == cb && a.str() == b.str() && !a.str().empty()) ++identical;
  }

  std::size_t sessions = 0, within = 0;
  auto record = [&](const staging::StageStats& st) {
    ++sessions;
    if (st.runs <= st.rerun_bound) ++within;
  };
  for (auto s : {einsum::Strategy::prophecy, einsum::Strategy::copy_all, einsum::Strategy::unified}) {
    for (int n : {1, 7, 32}) {
      einsum::BenchmarkOptions o;
      o.strategy = s;
      o.iterations = 2;
      record(einsum::build_matmul_benchmark(n, n + 1, n + 2, o).staged.stats);
      record(einsum::build_matvec_benchmark(n, n + 3, o).staged.stats);
    }
  }
  for (bool unfused : {false, true})
    for (int n : {8, 64, 1024}) {
      nn::ConvReluOptions o;
      o.force_unfused = unfused;
      record(nn::build_conv_relu_benchmark(n, std::min(n, 21), o).staged.stats);
    }
  return {identical == commands.size() && within == sessions,
          std::to_string(identical) + "/" + std::to_string(commands.size()) + " commands byte-identical; " +
              std::to_string(within) + "/" + std::to_string(sessions) + " staging sessions within the rerun bound"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"oracle equivalence", oracle_equivalence},
      {"bisimulation", bisimulation},
      {"leastness", leastness},
      {"strict-paper gap", strict_gap},
      {"einsum data movement", einsum_movement},
      {"conv/relu fusion", conv_relu},
      {"semantic preservation", semantic_preservation},
      {"determinism and termination", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    for (auto& ch : o.detail)
      if (ch == '\n') ch = ' ';
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %zu %s [%.2fs]: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), secs,
                o.detail.c_str());
    if (!o.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
