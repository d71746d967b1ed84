#pragma once

#include <optional>
#include <span>
#include <string>
#include <variant>

#include "prophecy/analysis/results.hpp"
#include "prophecy/core/semantics.hpp"

namespace prophecy::semantics {

using analysis::AnalysisResults;
using core::Configuration;
using core::LabelId;
using core::Program;
using core::State;
using core::VarSet;

/// What the extended live-variable rule for one command demands of pi.
///   precondition      S1: variables the command reads; must already be in pi
///   prediction_extra  S2: the S in pi' ⊆ pi ∪ S; {v} for `v := e`, else empty
struct StepObligations {
  VarSet precondition;
  VarSet prediction_extra;

  friend bool operator==(const StepObligations&, const StepObligations&) = default;
};

StepObligations command_obligations(const Program& p, LabelId l);
StepObligations command_obligations(const Program& p, const core::Label& l);

struct ExtendedConfiguration {
  LabelId label = 0;
  State state;
  VarSet pi;

  friend bool operator==(const ExtendedConfiguration&, const ExtendedConfiguration&) = default;
};

struct ExtOk {
  Configuration next;
};

struct PreconditionViolation {
  LabelId label = 0;
  VarSet missing;
};

/// pi' ⊄ pi ∪ S2 on the edge from -> to; `excess` is pi' - (pi ∪ S2).
struct PredictionViolation {
  LabelId from = 0;
  LabelId to = 0;
  VarSet excess;
};

using ExtStepOutcome = std::variant<ExtOk, PreconditionViolation, PredictionViolation, core::Stuck, core::AtDone>;

/// One extended transition <l, sigma, pi> => <l', sigma', pi_next>. The
/// standard step decides l' and sigma'; the prophecy obligations are checked
/// afterwards, precondition first.
ExtStepOutcome ext_step(const Program& p, const Configuration& cfg, const VarSet& pi, const VarSet& pi_next);

/// ext_step with pi := beta(l) and pi' := beta(l') for the l' the standard
/// step reaches.
ExtStepOutcome ext_step_with_results(const Program& p, const Configuration& cfg, const AnalysisResults& beta);

struct Finding {
  enum class Kind { precondition, prediction, preservation };

  Kind kind = Kind::precondition;
  LabelId label = 0;
  std::optional<LabelId> successor;
  VarSet witness;
  std::string detail;
};

struct CheckReport {
  std::string property;
  bool passed = true;
  std::size_t transitions_checked = 0;
  core::Trace::Kind execution = core::Trace::Kind::complete;
  std::optional<Finding> finding;
};

struct ExtendedTransition {
  ExtendedConfiguration from;
  ExtendedConfiguration to;
};

/// Preservation over an explicit log: each logged extended transition must
/// coincide with the standard step from the same <l, sigma>.
CheckReport check_preservation_log(const Program& p, std::span<const ExtendedTransition> log);

/// Replays the extended execution carrying beta and checks it with
/// check_preservation_log.
CheckReport check_preservation(const Program& p, const AnalysisResults& beta, const State& initial,
                               std::size_t max_steps);

/// For each standard transition of the bounded execution from `initial`,
/// requires ext_step_with_results to succeed. A pass witnesses the
/// bisimulation <l, sigma> ~ <l, sigma, beta(l)> along that execution.
CheckReport check_progress(const Program& p, const AnalysisResults& beta, const State& initial,
                           std::size_t max_steps);

std::string to_string(const Program& p, const CheckReport& r);
const char* to_string(Finding::Kind k);

}  // namespace prophecy::semantics
