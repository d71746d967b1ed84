#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "prophecy/core/program.hpp"

namespace prophecy::core {

struct Configuration {
  LabelId label = 0;
  State state;

  friend bool operator==(const Configuration&, const Configuration&) = default;
};

/// No rule applies: the command at `label` read an unmapped variable.
struct Stuck {
  LabelId label = 0;
  std::string undefined_variable;

  std::string reason(const Program& p) const;
  friend bool operator==(const Stuck&, const Stuck&) = default;
};

struct AtDone {
  friend bool operator==(const AtDone&, const AtDone&) = default;
};

using StepResult = std::variant<Configuration, Stuck, AtDone>;

/// One transition of the standard semantics. Throws UnknownLabelError when
/// the configuration's label is outside the program.
StepResult step(const Program& p, const Configuration& cfg);

struct Trace {
  enum class Kind { complete, stuck, truncated };

  std::vector<Configuration> configurations;
  Kind kind = Kind::complete;
  std::optional<Stuck> stuck;
};

/// Runs from <first(P), initial> for at most `max_steps` transitions.
Trace run_trace(const Program& p, State initial, std::size_t max_steps);

const char* to_string(Trace::Kind k);

}  // namespace prophecy::core
