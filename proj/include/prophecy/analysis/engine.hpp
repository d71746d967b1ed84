#pragma once

#include <optional>
#include <set>
#include <utility>
#include <variant>
#include <vector>

#include "prophecy/analysis/results.hpp"
#include "prophecy/core/semantics.hpp"

namespace prophecy::analysis {

/// beta(from) ⊆ beta(into) ∪ extra, collected on the CFG edge into -> from.
struct PredictionConstraint {
  LabelId from = 0;
  LabelId into = 0;
  VarSet extra;

  friend bool operator==(const PredictionConstraint&, const PredictionConstraint&) = default;
};

struct RunStats {
  std::size_t runs = 0;
  std::size_t mispredictions = 0;
  std::size_t constraint_repairs = 0;

  friend bool operator==(const RunStats&, const RunStats&) = default;
};

struct Completed {
  bool truncated = false;  // max_steps exhausted before done
};

struct Misprediction {
  enum class Cause { precondition, constraint };
  LabelId at = 0;
  Cause cause = Cause::precondition;
};

/// The standard semantics got stuck; this is an error in the analyzed
/// program, not a prophecy misprediction.
struct ProgramFailure {
  core::Stuck stuck;
};

using ExecuteOutcome = std::variant<Completed, Misprediction, ProgramFailure>;

struct EngineOptions {
  std::size_t max_steps = 10000;
  /// Skip repairing violated prediction constraints when they are recorded,
  /// i.e. only preconditions trigger reruns.
  bool strict_paper = false;
};

/// One analysis session: beta and the constraint set C live here and persist
/// across every run of the program.
class Session {
 public:
  explicit Session(const core::Program& p, bool strict_paper = false);

  /// A single run of the program from `initial`, checking preconditions and
  /// recording constraints as it goes. Every call counts as one run.
  ExecuteOutcome execute_once(const core::State& initial, std::size_t max_steps);

  /// Restores every constraint reachable backward from `l`, adding only what
  /// the constraints force.
  void solve(LabelId l);

  /// Records the constraint for edge into -> from; returns false if it was
  /// already present.
  bool add_constraint(LabelId into, LabelId from);

  const AnalysisResults& results() const { return beta_; }
  AnalysisResults& results() { return beta_; }
  const std::vector<PredictionConstraint>& constraints() const { return constraints_; }
  const RunStats& stats() const { return stats_; }
  RunStats& stats() { return stats_; }

  /// Precondition check and repair at `l`. Returns true on misprediction.
  bool enforce_precondition(LabelId l);
  /// Records the edge constraint and, unless strict, repairs it. Returns true
  /// on misprediction.
  bool enforce_edge(LabelId into, LabelId from);

 private:
  const core::Program& program_;
  bool strict_;
  AnalysisResults beta_;
  std::vector<PredictionConstraint> constraints_;
  std::vector<std::vector<std::size_t>> by_from_;
  std::set<std::pair<LabelId, LabelId>> keys_;
  std::vector<VarSet> uses_;
  std::vector<VarSet> defs_;
  RunStats stats_;
};

struct ConcreteAnalysis {
  enum class Status { converged, truncated, program_error, run_limit };

  AnalysisResults beta;
  RunStats stats;
  std::vector<PredictionConstraint> constraints;
  Status status = Status::converged;
  std::optional<core::Stuck> error;
};

/// Reruns the program from `initial` until a run completes with no
/// misprediction. The result covers the executed path only.
ConcreteAnalysis analyze_concrete(const core::Program& p, const core::State& initial, const EngineOptions& opts = {});

struct AllPathsAnalysis {
  AnalysisResults beta;
  RunStats stats;
  std::vector<PredictionConstraint> constraints;
};

/// Label-level exploration in which every `if` takes both branches. Each pass
/// visits all reachable labels and edges; a misprediction restarts the pass.
AllPathsAnalysis analyze_all_paths_detailed(const core::Program& p, bool strict_paper = false);
AnalysisResults analyze_all_paths(const core::Program& p);

/// Classical backward may-live dataflow solved with a worklist:
///   live_in(l) = use(l) ∪ (⋃ live_in(s) for s in succ(l)) - def(l)
AnalysisResults live_variables_oracle(const core::Program& p);

/// Exact comparison restricted to labels reachable from first(P).
bool equal_on_reachable(const core::Program& p, const AnalysisResults& a, const AnalysisResults& b);

/// Upper bound on mispredictions plus repairs in one session.
std::size_t misprediction_bound(const core::Program& p);

const char* to_string(ConcreteAnalysis::Status s);

}  // namespace prophecy::analysis
