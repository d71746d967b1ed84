#include <benchmark/benchmark.h>

#include <random>

#include "prophecy/analysis/corpus.hpp"
#include "prophecy/einsum/einsum.hpp"
#include "prophecy/nn/nn.hpp"

using namespace prophecy;

namespace {

staging::KernelExecution mode(const benchmark::State& state) {
  return state.range(0) == 0 ? staging::KernelExecution::serial : staging::KernelExecution::parallel;
}

void BM_InterpretMatmul(benchmark::State& state) {
  const int n = static_cast<int>(state.range(1));
  einsum::BenchmarkOptions opts;
  opts.iterations = 1;
  auto r = einsum::build_matmul_benchmark(n, n, n, opts);
  auto in = einsum::random_inputs(r, 0);
  staging::InterpOptions io{mode(state)};
  for (auto _ : state) benchmark::DoNotOptimize(staging::interpret_program(r.staged.program, in, io));
  state.SetLabel(state.range(0) == 0 ? "serial" : "parallel");
}
BENCHMARK(BM_InterpretMatmul)->ArgsProduct({{0, 1}, {16, 32, 64}})->Unit(benchmark::kMillisecond);

void BM_InterpretConvRelu(benchmark::State& state) {
  nn::ConvReluOptions opts;
  opts.iterations = 1;
  auto r = nn::build_conv_relu_benchmark(static_cast<int>(state.range(1)), 21, opts);
  auto in = nn::random_inputs(r, 0, true);
  staging::InterpOptions io{mode(state)};
  for (auto _ : state) benchmark::DoNotOptimize(staging::interpret_program(r.staged.program, in, io));
  state.SetLabel(state.range(0) == 0 ? "serial" : "parallel");
}
BENCHMARK(BM_InterpretConvRelu)->ArgsProduct({{0, 1}, {1024, 8192}})->Unit(benchmark::kMillisecond);

void BM_VerifyCorpus(benchmark::State& state) {
  std::mt19937_64 rng(0);
  auto cases = analysis::terminating_corpus(rng, static_cast<std::size_t>(state.range(1)), 10000);
  const auto exec = state.range(0) == 0 ? analysis::Execution::serial : analysis::Execution::parallel;
  for (auto _ : state) benchmark::DoNotOptimize(analysis::verify_corpus(cases, 10000, exec));
  state.SetLabel(state.range(0) == 0 ? "serial" : "parallel");
}
BENCHMARK(BM_VerifyCorpus)->ArgsProduct({{0, 1}, {200}})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
