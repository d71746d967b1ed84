#include "prophecy/core/program.hpp"

#include <algorithm>
#include <sstream>

namespace prophecy::core {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string where(const LabeledCommand& c) {
  return c.line > 0 ? " (line " + std::to_string(c.line) + ")" : std::string{};
}

}  // namespace

ProgramError::ProgramError(Kind kind, const std::string& message, int line, int column)
    : std::runtime_error(line > 0 ? std::to_string(line) + ":" + std::to_string(column) + ": " + message : message),
      kind_(kind),
      line_(line),
      column_(column) {}

std::string to_string(const Command& c) {
  return std::visit(overloaded{
                        [](const Skip&) { return std::string("skip"); },
                        [](const Assign& a) { return a.var + " := " + to_string(a.expr); },
                        [](const If& i) { return "if " + to_string(i.cond) + " then " + i.target.name; },
                        [](const Goto& g) { return "goto " + g.target.name; },
                        [](const Halt&) { return std::string("halt"); },
                        [](const Done&) { return std::string("done"); },
                    },
                    c);
}

Program::Program(std::vector<LabeledCommand> commands) : commands_(std::move(commands)) {
  if (commands_.empty()) throw ProgramError(ProgramError::Kind::empty_program, "program has no commands");

  for (LabelId i = 0; i < commands_.size(); ++i) {
    const auto& c = commands_[i];
    auto [it, inserted] = index_.emplace(c.label.name, i);
    if (!inserted) {
      throw ProgramError(ProgramError::Kind::duplicate_label, "duplicate label '" + c.label.name + "'", c.line, 1);
    }
  }

  const std::size_t n = commands_.size();
  targets_.resize(n);
  successors_.resize(n);
  predecessors_.resize(n);

  for (LabelId i = 0; i < n; ++i) {
    const auto& c = commands_[i];
    const Label* target = nullptr;
    if (const auto* g = std::get_if<Goto>(&c.command)) target = &g->target;
    if (const auto* b = std::get_if<If>(&c.command)) target = &b->target;
    if (target) {
      auto it = index_.find(target->name);
      if (it == index_.end()) {
        throw ProgramError(ProgramError::Kind::dangling_target,
                           "branch target '" + target->name + "' does not name a label" + where(c), c.line, 1);
      }
      targets_[i] = it->second;
    }

    if (std::holds_alternative<Halt>(c.command)) {
      if (i + 1 >= n || !std::holds_alternative<Done>(commands_[i + 1].command)) {
        throw ProgramError(ProgramError::Kind::halt_without_done,
                           "halt at '" + c.label.name + "' is not immediately followed by done" + where(c), c.line,
                           1);
      }
    }

    const bool falls_through = !std::holds_alternative<Goto>(c.command) && !std::holds_alternative<Done>(c.command);
    if (falls_through && i + 1 >= n) {
      throw ProgramError(ProgramError::Kind::falls_off_end,
                         "last command '" + c.label.name + "' falls through past the end of the program" + where(c),
                         c.line, 1);
    }
  }

  for (LabelId i = 0; i < n; ++i) {
    auto& succ = successors_[i];
    std::visit(overloaded{
                   [&](const Goto&) { succ.push_back(*targets_[i]); },
                   [&](const If&) {
                     succ.push_back(i + 1);
                     succ.push_back(*targets_[i]);
                   },
                   [&](const Done&) {},
                   [&](const auto&) { succ.push_back(i + 1); },
               },
               commands_[i].command);
    std::sort(succ.begin(), succ.end());
    succ.erase(std::unique(succ.begin(), succ.end()), succ.end());
    for (LabelId s : succ) predecessors_[s].push_back(i);
  }
}

std::optional<LabelId> Program::find(const Label& l) const {
  auto it = index_.find(l.name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

LabelId Program::id_of(const Label& l) const {
  auto id = find(l);
  if (!id) throw UnknownLabelError(l.name);
  return *id;
}

std::optional<LabelId> Program::next(LabelId id) const {
  if (id + 1 < commands_.size()) return id + 1;
  return std::nullopt;
}

std::optional<LabelId> Program::target(LabelId id) const { return targets_.at(id); }

VarSet Program::variables() const {
  VarSet out;
  for (const auto& c : commands_) {
    if (const auto* a = std::get_if<Assign>(&c.command)) {
      out.insert(a->var);
      out.merge(vars(a->expr));
    } else if (const auto* b = std::get_if<If>(&c.command)) {
      out.merge(vars(b->cond));
    }
  }
  return out;
}

bool operator==(const Program& a, const Program& b) {
  if (a.size() != b.size()) return false;
  for (LabelId i = 0; i < a.size(); ++i) {
    if (a.label(i) != b.label(i) || !(a.command(i) == b.command(i))) return false;
  }
  return true;
}

ProgramStructure program_structure(const Program& p, const Label& l) {
  const LabelId id = p.id_of(l);
  ProgramStructure s;
  if (auto n = p.next(id)) s.next = p.label(*n);
  for (LabelId succ : p.successors(id)) s.successors.insert(p.label(succ));
  for (LabelId pred : p.predecessors(id)) s.predecessors.insert(p.label(pred));
  return s;
}

std::vector<bool> reachable_labels(const Program& p) {
  std::vector<bool> seen(p.size(), false);
  std::vector<LabelId> stack{p.first()};
  seen[p.first()] = true;
  while (!stack.empty()) {
    LabelId l = stack.back();
    stack.pop_back();
    for (LabelId s : p.successors(l)) {
      if (!seen[s]) {
        seen[s] = true;
        stack.push_back(s);
      }
    }
  }
  return seen;
}

std::string print_program(const Program& p) {
  std::ostringstream os;
  for (const auto& c : p.commands()) os << c.label.name << ": " << to_string(c.command) << '\n';
  return os.str();
}

}  // namespace prophecy::core
