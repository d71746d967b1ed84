#include "prophecy/core/semantics.hpp"

#include <stdexcept>

namespace prophecy::core {

std::string Stuck::reason(const Program& p) const {
  return "undefined variable '" + undefined_variable + "' read at " + p.label(label).name;
}

StepResult step(const Program& p, const Configuration& cfg) {
  if (cfg.label >= p.size()) throw UnknownLabelError("#" + std::to_string(cfg.label));
  const LabelId l = cfg.label;
  const Command& c = p.command(l);

  if (std::holds_alternative<Done>(c)) return AtDone{};

  if (const auto* a = std::get_if<Assign>(&c)) {
    auto r = eval(a->expr, cfg.state);
    if (auto* u = std::get_if<UndefinedVariable>(&r)) return Stuck{l, u->name};
    Configuration out{*p.next(l), cfg.state};
    out.state.set(a->var, std::get<Evaluated<Value>>(r).value);
    return out;
  }
  if (const auto* b = std::get_if<If>(&c)) {
    auto r = eval(b->cond, cfg.state);
    if (auto* u = std::get_if<UndefinedVariable>(&r)) return Stuck{l, u->name};
    const bool taken = std::get<Evaluated<bool>>(r).value;
    return Configuration{taken ? *p.target(l) : *p.next(l), cfg.state};
  }
  if (std::holds_alternative<Goto>(c)) return Configuration{*p.target(l), cfg.state};
  // skip and halt both move to next(l); for halt that is the following done.
  return Configuration{*p.next(l), cfg.state};
}

Trace run_trace(const Program& p, State initial, std::size_t max_steps) {
  if (max_steps == 0) throw std::invalid_argument("run_trace: max_steps must be at least 1");
  Trace t;
  t.configurations.push_back(Configuration{p.first(), std::move(initial)});
  for (std::size_t steps = 0;; ++steps) {
    const Configuration& cur = t.configurations.back();
    if (p.is_done(cur.label)) {
      t.kind = Trace::Kind::complete;
      return t;
    }
    if (steps == max_steps) {
      t.kind = Trace::Kind::truncated;
      return t;
    }
    StepResult r = step(p, cur);
    if (auto* s = std::get_if<Stuck>(&r)) {
      t.kind = Trace::Kind::stuck;
      t.stuck = *s;
      return t;
    }
    t.configurations.push_back(std::move(std::get<Configuration>(r)));
  }
}

const char* to_string(Trace::Kind k) {
  switch (k) {
    case Trace::Kind::complete:
      return "complete";
    case Trace::Kind::stuck:
      return "stuck";
    case Trace::Kind::truncated:
      return "truncated";
  }
  return "?";
}

}  // namespace prophecy::core
