#include "prophecy/semantics/extended.hpp"

#include <algorithm>
#include <iterator>
#include <sstream>

namespace prophecy::semantics {

namespace {

VarSet difference(const VarSet& a, const VarSet& b) {
  VarSet out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()));
  return out;
}

CheckReport pass(std::string property) {
  CheckReport r;
  r.property = std::move(property);
  return r;
}

}  // namespace

StepObligations command_obligations(const Program& p, LabelId l) {
  if (l >= p.size()) throw core::UnknownLabelError("#" + std::to_string(l));
  StepObligations o;
  const auto& c = p.command(l);
  if (const auto* a = std::get_if<core::Assign>(&c)) {
    o.precondition = core::vars(a->expr);
    o.prediction_extra.insert(a->var);
  } else if (const auto* b = std::get_if<core::If>(&c)) {
    o.precondition = core::vars(b->cond);
  }
  return o;
}

StepObligations command_obligations(const Program& p, const core::Label& l) {
  return command_obligations(p, p.id_of(l));
}

ExtStepOutcome ext_step(const Program& p, const Configuration& cfg, const VarSet& pi, const VarSet& pi_next) {
  auto standard = core::step(p, cfg);
  if (auto* s = std::get_if<core::Stuck>(&standard)) return *s;
  if (std::holds_alternative<core::AtDone>(standard)) return core::AtDone{};
  auto& next = std::get<Configuration>(standard);

  const StepObligations o = command_obligations(p, cfg.label);
  if (VarSet missing = difference(o.precondition, pi); !missing.empty()) {
    return PreconditionViolation{cfg.label, std::move(missing)};
  }
  VarSet allowed = pi;
  allowed.insert(o.prediction_extra.begin(), o.prediction_extra.end());
  if (VarSet excess = difference(pi_next, allowed); !excess.empty()) {
    return PredictionViolation{cfg.label, next.label, std::move(excess)};
  }
  return ExtOk{std::move(next)};
}

ExtStepOutcome ext_step_with_results(const Program& p, const Configuration& cfg, const AnalysisResults& beta) {
  if (cfg.label >= p.size()) throw core::UnknownLabelError("#" + std::to_string(cfg.label));
  // pi' depends on where the standard step lands, so take the step first.
  auto standard = core::step(p, cfg);
  if (auto* s = std::get_if<core::Stuck>(&standard)) return *s;
  if (std::holds_alternative<core::AtDone>(standard)) return core::AtDone{};
  const LabelId to = std::get<Configuration>(standard).label;
  return ext_step(p, cfg, beta.at(cfg.label), beta.at(to));
}

CheckReport check_preservation_log(const Program& p, std::span<const ExtendedTransition> log) {
  CheckReport r = pass("preservation");
  for (const auto& t : log) {
    auto standard = core::step(p, Configuration{t.from.label, t.from.state});
    const auto* next = std::get_if<Configuration>(&standard);
    if (!next || next->label != t.to.label || !(next->state == t.to.state)) {
      r.passed = false;
      Finding f;
      f.kind = Finding::Kind::preservation;
      f.label = t.from.label;
      f.successor = t.to.label;
      std::ostringstream os;
      os << "extended transition " << p.label(t.from.label).name << " " << core::to_string(t.from.state) << " => "
         << p.label(t.to.label).name << " " << core::to_string(t.to.state) << " has no matching standard transition";
      if (next) os << " (standard step reaches " << p.label(next->label).name << " " << core::to_string(next->state)
                   << ")";
      f.detail = os.str();
      r.finding = std::move(f);
      return r;
    }
    ++r.transitions_checked;
  }
  return r;
}

CheckReport check_preservation(const Program& p, const AnalysisResults& beta, const State& initial,
                               std::size_t max_steps) {
  std::vector<ExtendedTransition> log;
  ExtendedConfiguration cur{p.first(), initial, beta.at(p.first())};
  core::Trace::Kind kind = core::Trace::Kind::truncated;
  for (std::size_t i = 0; i < max_steps; ++i) {
    auto out = ext_step_with_results(p, Configuration{cur.label, cur.state}, beta);
    if (std::holds_alternative<core::AtDone>(out)) {
      kind = core::Trace::Kind::complete;
      break;
    }
    auto* ok = std::get_if<ExtOk>(&out);
    if (!ok) {
      kind = core::Trace::Kind::stuck;
      break;
    }
    ExtendedConfiguration to{ok->next.label, ok->next.state, beta.at(ok->next.label)};
    log.push_back(ExtendedTransition{cur, to});
    cur = std::move(to);
  }
  if (kind == core::Trace::Kind::truncated && p.is_done(cur.label)) kind = core::Trace::Kind::complete;
  CheckReport r = check_preservation_log(p, log);
  r.execution = kind;
  return r;
}

CheckReport check_progress(const Program& p, const AnalysisResults& beta, const State& initial,
                           std::size_t max_steps) {
  CheckReport r = pass("progress");
  const core::Trace trace = core::run_trace(p, initial, max_steps);
  r.execution = trace.kind;
  // Every consecutive pair in the trace is a standard transition.
  for (std::size_t i = 0; i + 1 < trace.configurations.size(); ++i) {
    const Configuration& cfg = trace.configurations[i];
    auto out = ext_step_with_results(p, cfg, beta);
    if (std::holds_alternative<ExtOk>(out)) {
      ++r.transitions_checked;
      continue;
    }
    r.passed = false;
    Finding f;
    if (auto* pre = std::get_if<PreconditionViolation>(&out)) {
      f.kind = Finding::Kind::precondition;
      f.label = pre->label;
      f.witness = pre->missing;
      f.detail = "variables read at " + p.label(pre->label).name + " are not predicted live: " +
                 analysis::to_string(pre->missing);
    } else if (auto* pred = std::get_if<PredictionViolation>(&out)) {
      f.kind = Finding::Kind::prediction;
      f.label = pred->from;
      f.successor = pred->to;
      f.witness = pred->excess;
      f.detail = "prediction on edge " + p.label(pred->from).name + " -> " + p.label(pred->to).name +
                 " fails; excess " + analysis::to_string(pred->excess);
    } else {
      // Unreachable for a standard transition taken from the trace.
      f.kind = Finding::Kind::preservation;
      f.label = cfg.label;
      f.detail = "extended semantics has no transition where the standard semantics does";
    }
    r.finding = std::move(f);
    return r;
  }
  return r;
}

const char* to_string(Finding::Kind k) {
  switch (k) {
    case Finding::Kind::precondition:
      return "precondition_violation";
    case Finding::Kind::prediction:
      return "prediction_violation";
    case Finding::Kind::preservation:
      return "preservation_violation";
  }
  return "?";
}

std::string to_string(const Program& p, const CheckReport& r) {
  std::ostringstream os;
  os << r.property << ": " << (r.passed ? "pass" : "FAIL") << " (" << r.transitions_checked
     << " transitions, execution " << core::to_string(r.execution) << ")";
  if (r.finding) {
    os << "\n  " << to_string(r.finding->kind) << " at " << p.label(r.finding->label).name;
    if (r.finding->successor) os << " -> " << p.label(*r.finding->successor).name;
    if (!r.finding->witness.empty()) os << " witness " << analysis::to_string(r.finding->witness);
    os << "\n  " << r.finding->detail;
  }
  return os.str();
}

}  // namespace prophecy::semantics
