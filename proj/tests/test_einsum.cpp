#include <doctest.h>

#include <random>

#include "prophecy/einsum/einsum.hpp"
#include "prophecy/staging/emit.hpp"

using namespace prophecy;
using namespace prophecy::einsum;
using staging::interpret_program;
using staging::StageContext;
using staging::StagingError;
using staging::Type;

namespace {

using Set = std::set<std::string>;

BenchmarkOptions with(Strategy s, int iterations = 1, Grid g = {}) {
  BenchmarkOptions o;
  o.strategy = s;
  o.iterations = iterations;
  o.grid = g;
  return o;
}

std::vector<float> triple_loop(const std::vector<float>& a, const std::vector<float>& b, int M, int N, int O) {
  std::vector<float> c(static_cast<std::size_t>(M * O), 0.0f);
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < O; ++j) {
      float s = 0.0f;
      for (int k = 0; k < N; ++k) s += a[i * N + k] * b[k * O + j];
      c[i * O + j] = s;
    }
  return c;
}

std::string emit_session(const std::function<void(StageContext&, Session&)>& body, Strategy s = Strategy::prophecy,
                         Grid g = {}) {
  auto r = staging::run_staged([&](StageContext& ctx) {
    Session sess(ctx, s, g);
    body(ctx, sess);
  });
  return staging::emit_c(r.program);
}

}  // namespace

TEST_CASE("matmul under the prophecy strategy") {
  auto r = build_matmul_benchmark(8, 8, 8, with(Strategy::prophecy, 10));
  CHECK(r.tensors == std::vector<std::string>{"x", "x_b", "y", "y_b", "z", "z_b"});
  CHECK(r.movement.device_allocated == Set{"x", "y", "z"});
  CHECK(r.movement.copied_in == Set{"x", "y"});
  CHECK(r.movement.copied_out == Set{"z"});
  CHECK(r.movement.copy_in_calls == 2);
  CHECK(r.movement.copy_out_calls == 1);
  CHECK(r.movement.unified_allocated.empty());

  const auto& st = r.staged.stats;
  CHECK(st.runs == st.merges + 1);
  CHECK(st.runs == 6);
  CHECK(st.runs <= st.rerun_bound);
  std::vector<std::string> merged;
  for (const auto& e : st.log) merged.push_back(r.cell_labels.at(e.cell));
  CHECK(merged == std::vector<std::string>{"z.needs_gpu", "x.needs_gpu", "x.gpu_read", "y.needs_gpu", "y.gpu_read"});
  auto d = derivation(r);
  CHECK(d.front() == "run 1: z.needs_gpu F -> T");
  CHECK(d.back() == "runs = merges + 1 = 5 + 1 = 6");

  std::size_t at_t = 0;
  for (const auto& c : r.staged.cells) at_t += c.value == "T";
  CHECK(at_t == 5);
}

TEST_CASE("copy-all and unified strategies") {
  auto c = build_matmul_benchmark(4, 5, 6, with(Strategy::copy_all));
  CHECK(c.movement.device_allocated.size() == 6);
  CHECK(c.movement.copy_in_calls == 6);
  CHECK(c.movement.copy_out_calls == 6);
  CHECK(c.staged.stats.runs == 1);
  CHECK(c.staged.cells.empty());
  CHECK(c.staged.program.name == "benchmark_copy_all");

  auto u = build_matmul_benchmark(4, 5, 6, with(Strategy::unified));
  CHECK(u.movement.device_allocated.empty());
  CHECK(u.movement.unified_allocated == Set{"x", "y", "z"});
  CHECK(u.movement.copy_in_calls == 0);
  CHECK(u.movement.copy_out_calls == 0);
  CHECK(u.staged.stats.runs == 1);
}

TEST_CASE("movement matches an independent read/write analysis") {
  for (auto r : {build_matmul_benchmark(3, 4, 5, with(Strategy::prophecy)),
                 build_matvec_benchmark(6, 7, with(Strategy::prophecy))}) {
    REQUIRE(r.kernels.size() == 1);
    CHECK(r.movement.copied_in == r.kernels[0].reads);
    CHECK(r.movement.copied_out == r.kernels[0].writes);
    Set touched = r.kernels[0].reads;
    touched.insert(r.kernels[0].writes.begin(), r.kernels[0].writes.end());
    CHECK(r.movement.device_allocated == touched);
    CHECK(r.staged.stats.runs == r.staged.stats.merges + 1);
  }
}

TEST_CASE("interpreted matmul equals the triple loop") {
  struct Case {
    int M, N, O;
    Grid g;
  };
  for (auto [M, N, O, g] : {Case{8, 8, 8, {}}, Case{5, 7, 3, {2, 3}}, Case{9, 2, 11, {4, 2}}}) {
    auto r = build_matmul_benchmark(M, N, O, with(Strategy::prophecy, 2, g));
    auto in = random_inputs(r, 17);
    auto out = interpret_program(r.staged.program, in);
    auto want = triple_loop(in.buffers.at("arg0"), in.buffers.at("arg1"), M, N, O);
    const auto& got = out.buffers.at("arg2");
    REQUIRE(got.size() == want.size());
    for (std::size_t e = 0; e < want.size(); ++e) CHECK(got[e] == doctest::Approx(want[e]).epsilon(1e-5));
    CHECK(out.kernel_launches == 2);
  }
}

TEST_CASE("interpreted matvec equals the direct product") {
  const int M = 13, N = 6;
  auto r = build_matvec_benchmark(M, N, with(Strategy::prophecy, 1, {3, 2}));
  CHECK(r.movement.copied_in == Set{"x", "y"});
  CHECK(r.movement.copied_out == Set{"z"});
  auto in = random_inputs(r, 4);
  auto out = interpret_program(r.staged.program, in);
  const auto &a = in.buffers.at("arg0"), &v = in.buffers.at("arg1");
  for (int i = 0; i < M; ++i) {
    float s = 0.0f;
    for (int k = 0; k < N; ++k) s += a[i * N + k] * v[k];
    CHECK(out.buffers.at("arg2")[i] == doctest::Approx(s).epsilon(1e-5));
  }
}

TEST_CASE("property: strategies agree bit for bit") {
  std::mt19937 rng(0);
  for (int trial = 0; trial < 12; ++trial) {
    const int M = 1 + static_cast<int>(rng() % 7), N = 1 + static_cast<int>(rng() % 7),
              O = 1 + static_cast<int>(rng() % 7);
    const Grid g{1 + static_cast<int>(rng() % 4), 1 + static_cast<int>(rng() % 4)};
    std::vector<std::vector<float>> outs;
    for (auto s : {Strategy::prophecy, Strategy::copy_all, Strategy::unified}) {
      auto r = trial % 2 ? build_matmul_benchmark(M, N, O, with(s, 1, g)) : build_matvec_benchmark(M, N, with(s, 1, g));
      auto in = random_inputs(r, static_cast<std::uint64_t>(trial));
      auto out = interpret_program(r.staged.program, in, {staging::KernelExecution::serial});
      outs.push_back(out.buffers.at("arg2"));
    }
    CHECK(outs[0] == outs[1]);
    CHECK(outs[0] == outs[2]);
  }
}

TEST_CASE("generation is reproducible") {
  auto a = build_matmul_benchmark(6, 5, 4, with(Strategy::prophecy, 10));
  auto b = build_matmul_benchmark(6, 5, 4, with(Strategy::prophecy, 10));
  CHECK(staging::emit_c(a.staged.program) == staging::emit_c(b.staged.program));
  CHECK(derivation(a) == derivation(b));
}

TEST_CASE("einsum lowering shapes") {
  SUBCASE("constant assignment: two loops, no reduction") {
    auto text = emit_session([](StageContext&, Session& s) {
      Index i("i"), j("j");
      auto& x = s.tensor("x", {2, 3});
      x[i][j] = 3.0;
    });
    CHECK(text.find("for (int var1 = 0; var1 < 2; var1 = var1 + 1) {") != std::string::npos);
    CHECK(text.find("for (int var2 = 0; var2 < 3; var2 = var2 + 1) {") != std::string::npos);
    CHECK(text.find("var0[(3 * var1) + var2] = 3.0f;") != std::string::npos);
    CHECK(text.find("float var") == std::string::npos);
  }
  SUBCASE("host matmul: i, j outer, k reduction, accumulator 0") {
    auto text = emit_session([](StageContext&, Session& s) {
      Index i("i"), j("j"), k("k");
      auto& a = s.tensor("a", {2, 3});
      auto& b = s.tensor("b", {3, 4});
      auto& c = s.tensor("c", {2, 4});
      c[i][j] += a[i][k] * b[k][j];
    });
    const std::string want =
        "  for (int var3 = 0; var3 < 2; var3 = var3 + 1) {\n"
        "    for (int var4 = 0; var4 < 4; var4 = var4 + 1) {\n"
        "      float var5 = 0.0f;\n"
        "      for (int var6 = 0; var6 < 3; var6 = var6 + 1) {\n"
        "        var5 = var5 + (var0[(3 * var3) + var6] * var1[(4 * var6) + var4]);\n"
        "      }\n"
        "      var2[(4 * var3) + var4] = var5;\n"
        "    }\n"
        "  }\n";
    CHECK(text.find(want) != std::string::npos);
  }
  SUBCASE("product reduction starts at 1") {
    auto text = emit_session([](StageContext&, Session& s) {
      Index i("i"), k("k");
      auto& a = s.tensor("a", {2, 3});
      auto& p = s.tensor("p", {2});
      p[i] *= a[i][k];
    });
    CHECK(text.find("float var3 = 1.0f;") != std::string::npos);
    CHECK(text.find("var3 = var3 * var0[(3 * var2) + var4];") != std::string::npos);
  }
  SUBCASE("two-index GPU mapping") {
    auto text = emit_session(
        [](StageContext&, Session& s) {
          Index i("i"), j("j");
          auto& x = s.tensor("x", {5, 6});
          s.run_on_gpu([&] { x[i][j] = 1.0; });
        },
        Strategy::copy_all, {3, 4});
    CHECK(text.find("for (int var4 = var2; var4 < 5; var4 = var4 + 3) {") != std::string::npos);
    CHECK(text.find("for (int var5 = var3; var5 < 6; var5 = var5 + 4) {") != std::string::npos);
    CHECK(text.find("runtime::grid_sync();") != std::string::npos);
    CHECK(text.find("#pragma prophecy kernel cooperative") != std::string::npos);
  }
  SUBCASE("one-index GPU mapping uses the global thread id") {
    auto text = emit_session(
        [](StageContext&, Session& s) {
          Index i("i");
          auto& x = s.tensor("x", {50});
          s.run_on_gpu([&] { x[i] = 1.0; });
        },
        Strategy::copy_all, {3, 4});
    CHECK(text.find("int var4 = (var2 * 4) + var3;") != std::string::npos);
    CHECK(text.find("for (int var5 = var4; var5 < 50; var5 = var5 + 12) {") != std::string::npos);
  }
}

TEST_CASE("row-major flat index on a rank-3 tensor") {
  auto r = staging::run_staged([](StageContext& ctx) {
    Session s(ctx, Strategy::prophecy);
    Index i("i"), j("j"), k("k");
    auto& t = s.tensor("t", {2, 3, 4}, ctx.param(Type::float_ptr));
    t[i][j][k] = Term(i) * 100.0 + Term(j) * 10.0 + k;
  });
  staging::InterpInputs in;
  in.buffers["arg0"] = std::vector<float>(24, -1.0f);
  auto out = interpret_program(r.program, in).buffers.at("arg0");
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 4; ++k) CHECK(out[(i * 3 + j) * 4 + k] == static_cast<float>(i * 100 + j * 10 + k));
}

TEST_CASE("gpu_read cells are per kernel") {
  BenchmarkResult fake;
  auto r = staging::run_staged([&](StageContext& ctx) {
    Session s(ctx, Strategy::prophecy, {2, 2});
    Index i("i");
    auto& a = s.tensor("a", {4});
    auto& b = s.tensor("b", {4});
    auto& scratch = s.tensor("scratch", {4});
    a[i] = 1.0;
    scratch[i] = 2.0;
    s.run_on_gpu([&] { b[i] = a[i] * 2.0; });
    s.run_on_gpu([&] { b[i] = 5.0; });
    fake.var_tensor.clear();
    for (const auto& t : s.tensors()) {
      fake.var_tensor[t.host().expr()->name] = t.name();
      if (t.device()) fake.var_tensor[t.device()->expr()->name] = t.name();
    }
  });
  auto m = scan_movement(r.program, fake.var_tensor);
  CHECK(m.device_allocated == Set{"a", "b"});
  CHECK(m.copy_in_calls == 1);  // a, before the first kernel only
  CHECK(m.copied_in == Set{"a"});
  CHECK(m.copy_out_calls == 2);  // b after each kernel
  CHECK(r.stats.runs == r.stats.merges + 1);
}

TEST_CASE("einsum errors") {
  auto fails = [](const std::function<void(StageContext&, Session&)>& body) {
    CHECK_THROWS_AS(emit_session(body), StagingError);
  };
  fails([](StageContext&, Session& s) {
    s.tensor("a", {2});
    s.tensor("a", {3});
  });
  fails([](StageContext&, Session& s) { s.tensor("a", {2, 0}); });
  fails([](StageContext&, Session& s) { s.tensor("a", {}); });
  fails([](StageContext&, Session& s) {
    Index i("i"), k("k");
    auto& a = s.tensor("a", {2, 3});
    auto& b = s.tensor("b", {2});
    b[i] = a[i][k];
  });
  fails([](StageContext&, Session& s) {
    Index i("i");
    auto& a = s.tensor("a", {2});
    auto& b = s.tensor("b", {3});
    b[i] = a[i];
  });
  fails([](StageContext&, Session& s) {
    Index i("i"), j("j");
    auto& a = s.tensor("a", {2, 2});
    a[i] = 1.0;
    (void)j;
  });
  fails([](StageContext&, Session& s) {
    Index i("i"), j("j");
    auto& a = s.tensor("a", {2});
    a[i] = Term(j);
  });
  fails([](StageContext&, Session& s) { s.run_on_gpu([&] { s.run_on_gpu([] {}); }); });
  CHECK_THROWS_AS(build_matmul_benchmark(0, 2, 2), StagingError);
  CHECK(parse_strategy("copy-all") == Strategy::copy_all);
  CHECK(!parse_strategy("zero-copy"));
}

TEST_CASE("index ranges are bound per statement") {
  auto text = emit_session([](StageContext&, Session& s) {
    Index i("i"), j("j");
    auto& a = s.tensor("a", {2, 3});
    auto& b = s.tensor("b", {4, 5});
    a[i][j] = 1.0;
    b[i][j] = 2.0;
  });
  CHECK(text.find("< 4;") != std::string::npos);
  CHECK(text.find("< 5;") != std::string::npos);
}
