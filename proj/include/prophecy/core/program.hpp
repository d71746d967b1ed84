#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "prophecy/core/expr.hpp"

namespace prophecy::core {

struct Label {
  std::string name;

  friend bool operator==(const Label&, const Label&) = default;
  friend std::strong_ordering operator<=>(const Label& a, const Label& b) {
    return a.name.compare(b.name) <=> 0;
  }
};

struct Skip {
  friend bool operator==(const Skip&, const Skip&) = default;
};
struct Assign {
  std::string var;
  AExp expr;
  friend bool operator==(const Assign&, const Assign&) = default;
};
struct If {
  BExp cond;
  Label target;
  friend bool operator==(const If&, const If&) = default;
};
struct Goto {
  Label target;
  friend bool operator==(const Goto&, const Goto&) = default;
};
struct Halt {
  friend bool operator==(const Halt&, const Halt&) = default;
};
struct Done {
  friend bool operator==(const Done&, const Done&) = default;
};

using Command = std::variant<Skip, Assign, If, Goto, Halt, Done>;

std::string to_string(const Command& c);

struct LabeledCommand {
  Label label;
  Command command;
  int line = 0;  // source line, 0 when built in code
};

/// Position of a command within its Program; the dense key used by every
/// analysis table.
using LabelId = std::size_t;

class ProgramError : public std::runtime_error {
 public:
  enum class Kind { syntax, empty_program, duplicate_label, halt_without_done, dangling_target, falls_off_end };

  ProgramError(Kind kind, const std::string& message, int line = 0, int column = 0);

  Kind kind() const { return kind_; }
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  Kind kind_;
  int line_;
  int column_;
};

class UnknownLabelError : public std::out_of_range {
 public:
  explicit UnknownLabelError(const std::string& label) : std::out_of_range("unknown label '" + label + "'") {}
};

/// A validated sequence of uniquely labeled commands. Construction rejects
/// duplicate labels, a halt not followed by done, branch targets that do not
/// exist, and a final command that could fall through.
class Program {
 public:
  explicit Program(std::vector<LabeledCommand> commands);

  std::size_t size() const { return commands_.size(); }
  LabelId first() const { return 0; }

  const Label& label(LabelId id) const { return commands_.at(id).label; }
  const Command& command(LabelId id) const { return commands_.at(id).command; }
  const std::vector<LabeledCommand>& commands() const { return commands_; }

  std::optional<LabelId> find(const Label& l) const;
  LabelId id_of(const Label& l) const;  // throws UnknownLabelError

  std::optional<LabelId> next(LabelId id) const;
  std::optional<LabelId> target(LabelId id) const;  // if/goto only
  const std::vector<LabelId>& successors(LabelId id) const { return successors_.at(id); }
  const std::vector<LabelId>& predecessors(LabelId id) const { return predecessors_.at(id); }

  bool is_done(LabelId id) const { return std::holds_alternative<Done>(command(id)); }

  /// Every variable read or assigned anywhere in the program.
  VarSet variables() const;

  friend bool operator==(const Program& a, const Program& b);

 private:
  std::vector<LabeledCommand> commands_;
  std::unordered_map<std::string, LabelId> index_;
  std::vector<std::optional<LabelId>> targets_;
  std::vector<std::vector<LabelId>> successors_;
  std::vector<std::vector<LabelId>> predecessors_;
};

struct ProgramStructure {
  std::optional<Label> next;
  std::set<Label> successors;
  std::set<Label> predecessors;
};

ProgramStructure program_structure(const Program& p, const Label& l);

/// Labels reachable from first(P) along CFG edges.
std::vector<bool> reachable_labels(const Program& p);

std::string print_program(const Program& p);

}  // namespace prophecy::core
