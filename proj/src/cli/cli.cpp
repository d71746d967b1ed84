#include "prophecy/cli/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "prophecy/analysis/corpus.hpp"
#include "prophecy/analysis/engine.hpp"
#include "prophecy/core/parser.hpp"
#include "prophecy/einsum/einsum.hpp"
#include "prophecy/nn/nn.hpp"
#include "prophecy/semantics/extended.hpp"
#include "prophecy/staging/emit.hpp"

namespace prophecy::cli {

using json = nlohmann::ordered_json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---- report rendering ----

std::string scalar_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "yes" : "no";
  return v.dump();
}

bool all_scalars(const json& a) {
  return std::all_of(a.begin(), a.end(), [](const json& e) { return !e.is_structured(); });
}

// Lists of lines; every other scalar list is a set.
bool line_list(const std::string& key) { return key == "derivation" || key == "failures"; }

void render(const json& obj, int depth, std::ostream& os) {
  const std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
  for (const auto& [key, v] : obj.items()) {
    if (v.is_null()) continue;
    if (v.is_object()) {
      os << pad << key << ":\n";
      render(v, depth + 1, os);
    } else if (v.is_array() && all_scalars(v) && !line_list(key)) {
      std::string s = "{";
      for (const auto& e : v) s += (s.size() > 1 ? ", " : "") + scalar_text(e);
      os << pad << key << ": " << s << "}\n";
    } else if (v.is_array()) {
      os << pad << key << ":\n";
      for (const auto& e : v) {
        if (e.is_object()) {
          os << pad << "  -\n";
          render(e, depth + 2, os);
        } else {
          os << pad << "  " << scalar_text(e) << "\n";
        }
      }
    } else {
      os << pad << key << ": " << scalar_text(v) << "\n";
    }
  }
}

void print_report(const json& report, const std::string& format, std::ostream& out) {
  if (format == "json") {
    out << report.dump(2) << "\n";
  } else {
    render(report, 0, out);
  }
}

std::string hex64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "0x%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 14695981039346656037ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

json checksum(const std::vector<float>& v) {
  double sum = 0.0;
  for (float f : v) sum += f;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", sum);
  return json{{"elements", v.size()}, {"sum", std::string(buf)}, {"fnv", hex64(fnv1a(v.data(), v.size() * 4))}};
}

std::string code_hash(const std::string& code) { return hex64(fnv1a(code.data(), code.size())); }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---- analyze ----

struct AnalyzeArgs {
  std::string file;
  std::string mode = "concrete";
  std::vector<std::string> init;
  std::size_t max_steps = 10000;
  bool check = false;
  bool strict_paper = false;
  std::string format = "text";
};

json var_list(const core::VarSet& s) { return json(std::vector<std::string>(s.begin(), s.end())); }

json check_json(const core::Program& p, const semantics::CheckReport& r) {
  json j;
  j["passed"] = r.passed;
  j["transitions"] = r.transitions_checked;
  j["execution"] = core::to_string(r.execution);
  if (r.finding) {
    json f;
    f["kind"] = semantics::to_string(r.finding->kind);
    f["label"] = p.label(r.finding->label).name;
    f["successor"] = r.finding->successor ? json(p.label(*r.finding->successor).name) : json();
    f["witness"] = var_list(r.finding->witness);
    f["detail"] = r.finding->detail;
    j["finding"] = f;
  }
  return j;
}

int cmd_analyze(const AnalyzeArgs& a, std::ostream& out, std::ostream& err) {
  std::optional<core::Program> parsed;
  try {
    parsed.emplace(core::parse_program(read_file(a.file)));
  } catch (const core::ProgramError& e) {
    err << a.file << ": " << e.what() << "\n";
    return usage;
  }
  const core::Program& p = *parsed;

  // variables not given with --init start at 0
  core::State sigma;
  for (const auto& v : p.variables()) sigma.set(v, 0);
  for (const auto& kv : a.init) {
    auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("--init expects NAME=VALUE, got " + kv);
    core::Value val = 0;
    const char* first = kv.data() + eq + 1;
    const char* last = kv.data() + kv.size();
    auto res = std::from_chars(first, last, val);
    if (res.ec != std::errc() || res.ptr != last) throw UsageError("--init value is not an integer: " + kv);
    sigma.set(kv.substr(0, eq), val);
  }

  json report;
  report["command"] = "analyze";
  report["program"] = a.file;
  report["labels"] = p.size();
  report["mode"] = a.mode;
  report["strict_paper"] = a.strict_paper;

  analysis::AnalysisResults beta;
  analysis::RunStats stats;
  std::string status = "converged";
  bool failed = false;
  if (a.mode == "concrete") {
    analysis::EngineOptions opts;
    opts.max_steps = a.max_steps;
    opts.strict_paper = a.strict_paper;
    auto r = analysis::analyze_concrete(p, sigma, opts);
    beta = r.beta;
    stats = r.stats;
    status = analysis::to_string(r.status);
    if (r.status == analysis::ConcreteAnalysis::Status::program_error ||
        r.status == analysis::ConcreteAnalysis::Status::run_limit)
      failed = true;
    if (r.error) report["program_error"] = r.error->reason(p);
  } else {
    auto r = analysis::analyze_all_paths_detailed(p, a.strict_paper);
    beta = r.beta;
    stats = r.stats;
  }

  json b = json::object();
  for (core::LabelId l = 0; l < p.size(); ++l) b[p.label(l).name] = var_list(beta.at(l));
  report["beta"] = b;
  report["runs"] = stats.runs;
  report["mispredictions"] = stats.mispredictions;
  report["constraint_repairs"] = stats.constraint_repairs;
  report["status"] = status;

  report["oracle_match"] = nullptr;
  report["oracle_relation"] = nullptr;
  report["preservation"] = nullptr;
  report["progress"] = nullptr;
  if (a.check) {
    auto oracle = analysis::live_variables_oracle(p);
    // a single execution only has to be covered by the classical result
    const bool match = a.mode == "concrete" ? beta.below(oracle) : analysis::equal_on_reachable(p, beta, oracle);
    report["oracle_match"] = match;
    report["oracle_relation"] = a.mode == "concrete" ? "subset" : "equal on reachable labels";
    auto pres = semantics::check_preservation(p, beta, sigma, a.max_steps);
    auto prog = semantics::check_progress(p, beta, sigma, a.max_steps);
    report["preservation"] = check_json(p, pres);
    report["progress"] = check_json(p, prog);
    failed = failed || !match || !pres.passed || !prog.passed;
  }
  report["result"] = failed ? "fail" : "pass";
  print_report(report, a.format, out);
  return failed ? violation : ok;
}

// ---- stage ----

struct StageArgs {
  std::string dsl;
  std::string strategy = "prophecy";
  int m = 32, n = 32, o = 32;
  int size = 1024, filter = 21;
  int iterations = 10;
  int max_bid = 40, max_tid = 512;
  std::string emit;
  bool stats = false;
  bool run_interp = false;
  bool diff = false;
  std::uint64_t seed = 0;
  std::string format = "text";
};

void write_code(const std::string& path, const std::string& code, std::ostream& out) {
  if (path == "-") {
    out << code;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw UsageError("cannot write " + path);
  f << code;
}

json cells_json(const std::vector<staging::CellInfo>& cells, const std::map<std::size_t, std::string>& labels) {
  json a = json::array();
  for (const auto& c : cells) {
    auto it = labels.find(c.id);
    a.push_back(json{{"id", c.id}, {"label", it == labels.end() ? "" : it->second}, {"value", c.value}});
  }
  return a;
}

json set_json(const std::set<std::string>& s) { return json(std::vector<std::string>(s.begin(), s.end())); }

int stage_einsum(const StageArgs& a, std::ostream& out, bool& failed, json& report) {
  auto strategy = einsum::parse_strategy(a.strategy);
  einsum::BenchmarkOptions opts;
  opts.strategy = *strategy;
  opts.iterations = a.iterations;
  opts.grid = {a.max_bid, a.max_tid};
  const bool matmul = a.dsl == "einsum-matmul";
  auto build = [&](einsum::Strategy s) {
    auto o = opts;
    o.strategy = s;
    return matmul ? einsum::build_matmul_benchmark(a.m, a.n, a.o, o) : einsum::build_matvec_benchmark(a.m, a.n, o);
  };
  auto r = build(*strategy);
  const std::string code = staging::emit_c(r.staged.program);
  if (!a.emit.empty()) write_code(a.emit, code, out);

  report["strategy"] = einsum::to_string(r.strategy);
  report["function"] = r.staged.program.name;
  report["sizes"] = matmul ? json{{"m", a.m}, {"n", a.n}, {"o", a.o}} : json{{"m", a.m}, {"n", a.n}};
  report["iterations"] = a.iterations;
  report["code_fnv"] = code_hash(code);

  if (a.stats) {
    const auto& st = r.staged.stats;
    json s;
    s["runs"] = st.runs;
    s["merges"] = st.merges;
    s["rerun_bound"] = st.rerun_bound;
    s["derivation"] = einsum::derivation(r);
    s["cells"] = cells_json(r.staged.cells, r.cell_labels);
    s["tensors"] = r.tensors;
    s["roles"] = json{{"x", "A"}, {"y", "B"}, {"z", "C"}};
    s["device_allocated"] = set_json(r.movement.device_allocated);
    s["unified_allocated"] = set_json(r.movement.unified_allocated);
    s["copied_in"] = set_json(r.movement.copied_in);
    s["copied_out"] = set_json(r.movement.copied_out);
    s["copy_in_calls"] = r.movement.copy_in_calls;
    s["copy_out_calls"] = r.movement.copy_out_calls;
    std::set<std::string> reads, writes;
    for (const auto& k : r.kernels) {
      reads.insert(k.reads.begin(), k.reads.end());
      writes.insert(k.writes.begin(), k.writes.end());
    }
    s["kernel_reads"] = set_json(reads);
    s["kernel_writes"] = set_json(writes);
    json checks;
    checks["runs_equal_merges_plus_one"] = st.runs == st.merges + 1;
    checks["within_rerun_bound"] = st.runs <= st.rerun_bound;
    bool good = st.runs == st.merges + 1 && st.runs <= st.rerun_bound;
    if (r.strategy == einsum::Strategy::prophecy) {
      const bool exact = r.movement.copied_in == reads && r.movement.copied_out == writes;
      checks["movement_matches_kernel_access"] = exact;
      good = good && exact;
    }
    s["checks"] = checks;
    failed = failed || !good;
    report["stats"] = s;
  }

  if (a.run_interp) {
    auto in = einsum::random_inputs(r, a.seed);
    auto res = staging::interpret_program(r.staged.program, in);
    report["interp"] = json{{"seed", a.seed},
                            {"kernel_launches", res.kernel_launches},
                            {"outputs", json{{"arg2", checksum(res.buffers.at("arg2"))}}}};
  }

  if (a.diff) {
    auto in = einsum::random_inputs(r, a.seed);
    json d;
    std::optional<std::vector<float>> first;
    bool same = true;
    for (auto s : {einsum::Strategy::prophecy, einsum::Strategy::copy_all, einsum::Strategy::unified}) {
      auto out_s = staging::interpret_program(build(s).staged.program, in).buffers.at("arg2");
      d[einsum::to_string(s)] = checksum(out_s)["fnv"];
      if (!first) {
        first = out_s;
      } else {
        same = same && *first == out_s;
      }
    }
    failed = failed || !same;
    report["diff"] = json{{"seed", a.seed}, {"strategies", d}, {"identical", same}};
  }
  return ok;
}

int stage_nn(const StageArgs& a, std::ostream& out, bool& failed, json& report) {
  nn::ConvReluOptions opts;
  opts.iterations = a.iterations;
  auto r = nn::build_conv_relu_benchmark(a.size, a.filter, opts);
  const std::string code = staging::emit_c(r.staged.program);
  if (!a.emit.empty()) write_code(a.emit, code, out);

  report["function"] = r.staged.program.name;
  report["sizes"] = json{{"size", a.size}, {"filter", a.filter}};
  report["iterations"] = a.iterations;
  report["code_fnv"] = code_hash(code);

  if (a.stats) {
    const auto& st = r.staged.stats;
    json s;
    s["runs"] = st.runs;
    s["merges"] = st.merges;
    s["rerun_bound"] = st.rerun_bound;
    s["derivation"] = nn::derivation(r);
    s["cells"] = cells_json(r.staged.cells, r.cell_labels);
    s["loop_nests"] = json{{"divergent_thresholds", r.loop_nests.at(0)}, {"uniform_threshold", r.loop_nests.at(1)}};
    json checks;
    checks["runs_equal_merges_plus_one"] = st.runs == st.merges + 1;
    checks["within_rerun_bound"] = st.runs <= st.rerun_bound;
    s["checks"] = checks;
    failed = failed || st.runs != st.merges + 1 || st.runs > st.rerun_bound;
    report["stats"] = s;
  }

  auto consumed = [](const staging::InterpOutputs& o) {
    std::vector<std::vector<float>> v;
    for (std::size_t c = 0; c < o.consumed; ++c) v.push_back(o.buffers.at("consumed#" + std::to_string(c)));
    return v;
  };

  if (a.run_interp) {
    json outputs;
    for (bool small_t : {true, false}) {
      auto res = staging::interpret_program(r.staged.program, nn::random_inputs(r, a.seed, small_t));
      // consecutive identical snapshots collapse into one entry with a count
      json per = json::array();
      for (const auto& v : consumed(res)) {
        auto c = checksum(v);
        if (!per.empty() && per.back()["fnv"] == c["fnv"]) {
          per.back()["count"] = per.back()["count"].get<int>() + 1;
        } else {
          json e{{"count", 1}};
          e.update(c);
          per.push_back(e);
        }
      }
      outputs[small_t ? "small_t=1" : "small_t=0"] = per;
    }
    report["interp"] = json{{"seed", a.seed}, {"consumed", outputs}};
  }

  if (a.diff) {
    auto plain_opts = opts;
    plain_opts.force_unfused = true;
    auto plain = nn::build_conv_relu_benchmark(a.size, a.filter, plain_opts);
    double worst = 0.0;
    bool shape = true;
    for (bool small_t : {true, false}) {
      auto in = nn::random_inputs(r, a.seed, small_t);
      auto x = consumed(staging::interpret_program(r.staged.program, in));
      auto y = consumed(staging::interpret_program(plain.staged.program, in));
      if (x.size() != y.size()) {
        shape = false;
        continue;
      }
      for (std::size_t c = 0; c < x.size(); ++c)
        for (std::size_t e = 0; e < x[c].size(); ++e) worst = std::max(worst, double(std::fabs(x[c][e] - y[c][e])));
    }
    const bool agree = shape && worst <= 1e-6;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", worst);
    failed = failed || !agree;
    report["diff"] = json{{"seed", a.seed},
                          {"against", "force-unfused"},
                          {"max_abs_difference", std::string(buf)},
                          {"tolerance", "1e-6"},
                          {"agree", agree}};
  }
  return ok;
}

int cmd_stage(StageArgs a, bool strategy_given, std::ostream& out, std::ostream& err) {
  if (a.dsl == "nn-conv-relu" && strategy_given) {
    err << "--strategy applies to the einsum benchmarks only\n";
    return usage;
  }
  if (!einsum::parse_strategy(a.strategy)) {
    err << "unknown strategy " << a.strategy << "\n";
    return usage;
  }
  const bool report_wanted = a.stats || a.run_interp || a.diff;
  if (a.emit.empty() && !report_wanted) a.emit = "-";

  json report;
  report["command"] = "stage";
  report["dsl"] = a.dsl;
  bool failed = false;
  if (a.dsl == "nn-conv-relu") {
    stage_nn(a, out, failed, report);
  } else {
    stage_einsum(a, out, failed, report);
  }
  if (report_wanted) {
    report["result"] = failed ? "fail" : "pass";
    print_report(report, a.format, out);
  }
  return failed ? violation : ok;
}

// ---- verify ----

struct VerifyArgs {
  std::size_t programs = 200;
  std::uint64_t seed = 0;
  std::size_t max_steps = 10000;
  std::size_t max_commands = 25;
  std::size_t max_vars = 6;
  bool serial = false;
  std::string format = "text";
};

int cmd_verify(const VerifyArgs& a, std::ostream& out) {
  std::mt19937_64 rng(a.seed);
  analysis::GeneratorOptions g;
  g.max_commands = a.max_commands;
  g.max_variables = a.max_vars;
  auto cases = analysis::terminating_corpus(rng, a.programs, a.max_steps, g);
  auto verdicts = analysis::verify_corpus(cases, a.max_steps,
                                          a.serial ? analysis::Execution::serial : analysis::Execution::parallel);
  std::size_t oracle = 0, converged = 0, progress = 0, preservation = 0, passed = 0, runs = 0;
  json failures = json::array();
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    const auto& v = verdicts[i];
    oracle += v.oracle_match;
    converged += v.concrete_converged;
    progress += v.progress;
    preservation += v.preservation;
    passed += v.ok();
    runs += v.runs;
    if (!v.ok()) failures.push_back("#" + std::to_string(i) + ": " + v.detail);
  }
  json report;
  report["command"] = "verify";
  report["seed"] = a.seed;
  report["programs"] = verdicts.size();
  report["max_commands"] = a.max_commands;
  report["max_variables"] = a.max_vars;
  report["oracle_match"] = oracle;
  report["concrete_converged"] = converged;
  report["progress"] = progress;
  report["preservation"] = preservation;
  report["total_runs"] = runs;
  report["passed"] = passed;
  report["failures"] = failures;
  report["result"] = passed == verdicts.size() ? "pass" : "fail";
  print_report(report, a.format, out);
  return passed == verdicts.size() ? ok : violation;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Prophecy-variable analysis and staged code generation", "prophecy"};
  app.require_subcommand(1);
  const auto formats = CLI::IsMember({"text", "json"});

  AnalyzeArgs an;
  auto* analyze = app.add_subcommand("analyze", "Run the reexecution analysis on a core-language program");
  analyze->add_option("file", an.file, "Program file")->required();
  analyze->add_option("--mode", an.mode, "concrete or all-paths")
      ->capture_default_str()
      ->check(CLI::IsMember({"concrete", "all-paths"}));
  analyze->add_option("--init", an.init, "Initial value NAME=VALUE (repeatable; others start at 0)")
      ->allow_extra_args(false);
  analyze->add_option("--max-steps", an.max_steps, "Step bound per run")->capture_default_str();
  analyze->add_flag("--check", an.check, "Compare with the classical oracle and check Preservation and Progress");
  analyze->add_flag("--strict-paper", an.strict_paper, "Disable prediction-constraint repair");
  analyze->add_option("--format", an.format, "text or json")->capture_default_str()->check(formats);

  StageArgs st;
  auto* stage = app.add_subcommand("stage", "Generate a DSL benchmark and report on it");
  stage->add_option("--dsl", st.dsl, "einsum-matmul, einsum-matvec or nn-conv-relu")
      ->required()
      ->check(CLI::IsMember({"einsum-matmul", "einsum-matvec", "nn-conv-relu"}));
  auto* strategy_opt = stage->add_option("--strategy", st.strategy, "prophecy, copy-all or unified (einsum only)")
                           ->capture_default_str()
                           ->check(CLI::IsMember({"prophecy", "copy-all", "unified"}));
  stage->add_option("--m", st.m, "Rows of x")->capture_default_str()->check(CLI::PositiveNumber);
  stage->add_option("--n", st.n, "Columns of x")->capture_default_str()->check(CLI::PositiveNumber);
  stage->add_option("--o", st.o, "Columns of y (matmul)")->capture_default_str()->check(CLI::PositiveNumber);
  stage->add_option("--size", st.size, "Input length (nn)")->capture_default_str()->check(CLI::PositiveNumber);
  stage->add_option("--filter", st.filter, "Filter length (nn)")->capture_default_str()->check(CLI::PositiveNumber);
  stage->add_option("--iterations", st.iterations, "Iterations of the timing loop")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  stage->add_option("--max-bid", st.max_bid, "Kernel blocks")->capture_default_str()->check(CLI::PositiveNumber);
  stage->add_option("--max-tid", st.max_tid, "Threads per block")->capture_default_str()->check(CLI::PositiveNumber);
  stage->add_option("--emit", st.emit, "Write the generated code to PATH (- for stdout)");
  stage->add_flag("--stats", st.stats, "Report run counts, cells and data movement");
  stage->add_flag("--run-interp", st.run_interp, "Interpret the program on seeded random inputs");
  stage->add_flag("--diff-strategies", st.diff, "Check that all variants compute the same outputs");
  stage->add_option("--seed", st.seed, "Seed for generated inputs")->capture_default_str();
  stage->add_option("--format", st.format, "text or json")->capture_default_str()->check(formats);

  VerifyArgs ve;
  auto* verify = app.add_subcommand("verify", "Check random programs against the oracle, Progress and Preservation");
  verify->add_option("--programs", ve.programs, "Number of programs")->capture_default_str();
  verify->add_option("--seed", ve.seed, "Generator seed")->capture_default_str();
  verify->add_option("--max-steps", ve.max_steps, "Termination bound")->capture_default_str();
  verify->add_option("--max-commands", ve.max_commands, "Commands per program")
      ->capture_default_str()
      ->check(CLI::Range(3, 1000));
  verify->add_option("--max-vars", ve.max_vars, "Variables per program")->capture_default_str()->check(CLI::Range(1, 6));
  verify->add_flag("--serial", ve.serial, "Use the serial reference path");
  verify->add_option("--format", ve.format, "text or json")->capture_default_str()->check(formats);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return usage;
  }

  try {
    if (*analyze) return cmd_analyze(an, out, err);
    if (*stage) return cmd_stage(st, strategy_opt->count() > 0, out, err);
    if (*verify) return cmd_verify(ve, out);
  } catch (const UsageError& e) {
    err << e.what() << "\n";
    return usage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return violation;
  }
  return usage;
}

}  // namespace prophecy::cli
