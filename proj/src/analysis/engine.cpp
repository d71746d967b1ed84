#include "prophecy/analysis/engine.hpp"

#include <algorithm>
#include <iterator>

#include "prophecy/semantics/extended.hpp"

namespace prophecy::analysis {

namespace {

VarSet minus(const VarSet& a, const VarSet& b) {
  VarSet out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()));
  return out;
}

bool subset(const VarSet& a, const VarSet& b) { return std::includes(b.begin(), b.end(), a.begin(), a.end()); }

}  // namespace

Session::Session(const core::Program& p, bool strict_paper)
    : program_(p), strict_(strict_paper), beta_(p), by_from_(p.size()) {
  uses_.reserve(p.size());
  defs_.reserve(p.size());
  for (LabelId l = 0; l < p.size(); ++l) {
    auto o = semantics::command_obligations(p, l);
    uses_.push_back(std::move(o.precondition));
    defs_.push_back(std::move(o.prediction_extra));
  }
}

bool Session::add_constraint(LabelId into, LabelId from) {
  if (!keys_.emplace(into, from).second) return false;
  by_from_.at(from).push_back(constraints_.size());
  constraints_.push_back(PredictionConstraint{from, into, defs_.at(into)});
  return true;
}

void Session::solve(LabelId l) {
  std::vector<LabelId> work{l};
  while (!work.empty()) {
    const LabelId cur = work.back();
    work.pop_back();
    for (std::size_t idx : by_from_[cur]) {
      const auto& c = constraints_[idx];
      VarSet add = minus(minus(beta_.at(c.from), c.extra), beta_.at(c.into));
      if (add.empty()) continue;
      beta_.at(c.into).merge(add);
      work.push_back(c.into);
    }
  }
}

bool Session::enforce_precondition(LabelId l) {
  if (subset(uses_[l], beta_.at(l))) return false;
  beta_.at(l).insert(uses_[l].begin(), uses_[l].end());
  solve(l);
  ++stats_.mispredictions;
  return true;
}

bool Session::enforce_edge(LabelId into, LabelId from) {
  add_constraint(into, from);
  if (strict_) return false;
  VarSet add = minus(minus(beta_.at(from), defs_[into]), beta_.at(into));
  if (add.empty()) return false;
  beta_.at(into).merge(add);
  solve(into);
  ++stats_.constraint_repairs;
  return true;
}

ExecuteOutcome Session::execute_once(const core::State& initial, std::size_t max_steps) {
  ++stats_.runs;
  core::Configuration cfg{program_.first(), initial};
  for (std::size_t steps = 0;; ++steps) {
    if (program_.is_done(cfg.label)) return Completed{false};
    if (steps == max_steps) return Completed{true};
    auto r = core::step(program_, cfg);
    if (auto* s = std::get_if<core::Stuck>(&r)) return ProgramFailure{*s};
    auto& next = std::get<core::Configuration>(r);
    if (enforce_precondition(cfg.label)) return Misprediction{cfg.label, Misprediction::Cause::precondition};
    if (enforce_edge(cfg.label, next.label)) return Misprediction{cfg.label, Misprediction::Cause::constraint};
    cfg = std::move(next);
  }
}

std::size_t misprediction_bound(const core::Program& p) { return p.size() * p.variables().size(); }

ConcreteAnalysis analyze_concrete(const core::Program& p, const core::State& initial, const EngineOptions& opts) {
  Session session(p, opts.strict_paper);
  ConcreteAnalysis out;
  const std::size_t run_limit = misprediction_bound(p) + 1;
  for (;;) {
    if (session.stats().runs == run_limit) {
      out.status = ConcreteAnalysis::Status::run_limit;
      break;
    }
    auto r = session.execute_once(initial, opts.max_steps);
    if (std::holds_alternative<Misprediction>(r)) continue;
    if (auto* f = std::get_if<ProgramFailure>(&r)) {
      out.status = ConcreteAnalysis::Status::program_error;
      out.error = f->stuck;
    } else {
      out.status = std::get<Completed>(r).truncated ? ConcreteAnalysis::Status::truncated
                                                    : ConcreteAnalysis::Status::converged;
    }
    break;
  }
  out.beta = session.results();
  out.stats = session.stats();
  out.constraints = session.constraints();
  return out;
}

AllPathsAnalysis analyze_all_paths_detailed(const core::Program& p, bool strict_paper) {
  Session session(p, strict_paper);
  for (;;) {
    ++session.stats().runs;
    std::vector<bool> visited(p.size(), false);
    std::vector<LabelId> stack{p.first()};
    visited[p.first()] = true;
    bool mispredicted = false;
    while (!stack.empty() && !mispredicted) {
      const LabelId l = stack.back();
      stack.pop_back();
      if (p.is_done(l)) continue;
      if (session.enforce_precondition(l)) {
        mispredicted = true;
        break;
      }
      for (LabelId s : p.successors(l)) {
        if (session.enforce_edge(l, s)) {
          mispredicted = true;
          break;
        }
        if (!visited[s]) {
          visited[s] = true;
          stack.push_back(s);
        }
      }
    }
    if (!mispredicted) break;
  }
  return AllPathsAnalysis{session.results(), session.stats(), session.constraints()};
}

AnalysisResults analyze_all_paths(const core::Program& p) { return analyze_all_paths_detailed(p).beta; }

AnalysisResults live_variables_oracle(const core::Program& p) {
  const std::size_t n = p.size();
  std::vector<VarSet> use(n), def(n);
  for (LabelId l = 0; l < n; ++l) {
    const auto& c = p.command(l);
    if (const auto* a = std::get_if<core::Assign>(&c)) {
      use[l] = core::vars(a->expr);
      def[l].insert(a->var);
    } else if (const auto* b = std::get_if<core::If>(&c)) {
      use[l] = core::vars(b->cond);
    }
  }

  AnalysisResults live(n);
  std::vector<LabelId> work;
  std::vector<bool> queued(n, true);
  for (LabelId l = 0; l < n; ++l) work.push_back(l);
  while (!work.empty()) {
    const LabelId l = work.back();
    work.pop_back();
    queued[l] = false;
    VarSet out;
    for (LabelId s : p.successors(l)) out.insert(live.at(s).begin(), live.at(s).end());
    VarSet in = use[l];
    for (const auto& v : out) {
      if (!def[l].contains(v)) in.insert(v);
    }
    if (in == live.at(l)) continue;
    live.at(l) = std::move(in);
    for (LabelId pred : p.predecessors(l)) {
      if (!queued[pred]) {
        queued[pred] = true;
        work.push_back(pred);
      }
    }
  }
  return live;
}

bool equal_on_reachable(const core::Program& p, const AnalysisResults& a, const AnalysisResults& b) {
  const auto reach = core::reachable_labels(p);
  for (LabelId l = 0; l < p.size(); ++l) {
    if (reach[l] && a.at(l) != b.at(l)) return false;
  }
  return true;
}

const char* to_string(ConcreteAnalysis::Status s) {
  switch (s) {
    case ConcreteAnalysis::Status::converged:
      return "converged";
    case ConcreteAnalysis::Status::truncated:
      return "truncated";
    case ConcreteAnalysis::Status::program_error:
      return "program_error";
    case ConcreteAnalysis::Status::run_limit:
      return "run_limit";
  }
  return "?";
}

}  // namespace prophecy::analysis
