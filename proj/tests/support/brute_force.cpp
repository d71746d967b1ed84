#include "brute_force.hpp"

#include <bit>
#include <cstdint>
#include <map>
#include <stdexcept>

namespace prophecy::testing {

namespace {

void collect(const core::AExp& e, core::VarSet& out) {
  switch (e.kind) {
    case core::AExp::Kind::literal:
      return;
    case core::AExp::Kind::variable:
      out.insert(e.variable);
      return;
    default:
      collect(*e.lhs, out);
      collect(*e.rhs, out);
  }
}

void collect(const core::BExp& b, core::VarSet& out) {
  if (b.a0) collect(*b.a0, out);
  if (b.a1) collect(*b.a1, out);
  if (b.b0) collect(*b.b0, out);
  if (b.b1) collect(*b.b1, out);
}

}  // namespace

Obligations derive_obligations(const core::Program& p) {
  const auto& cmds = p.commands();
  const std::size_t n = cmds.size();
  std::map<std::string, core::LabelId> where;
  for (core::LabelId i = 0; i < n; ++i) where[cmds[i].label.name] = i;

  Obligations o;
  o.use.resize(n);
  o.def.resize(n);
  std::vector<std::vector<core::LabelId>> succ(n);
  core::VarSet all;
  for (core::LabelId i = 0; i < n; ++i) {
    const auto& c = cmds[i].command;
    if (const auto* a = std::get_if<core::Assign>(&c)) {
      collect(a->expr, o.use[i]);
      o.def[i].insert(a->var);
      succ[i].push_back(i + 1);
    } else if (const auto* b = std::get_if<core::If>(&c)) {
      collect(b->cond, o.use[i]);
      succ[i].push_back(i + 1);
      if (where.at(b->target.name) != i + 1) succ[i].push_back(where.at(b->target.name));
    } else if (const auto* g = std::get_if<core::Goto>(&c)) {
      succ[i].push_back(where.at(g->target.name));
    } else if (!std::holds_alternative<core::Done>(c)) {
      succ[i].push_back(i + 1);
    }
    all.insert(o.use[i].begin(), o.use[i].end());
    all.insert(o.def[i].begin(), o.def[i].end());
  }
  o.variables.assign(all.begin(), all.end());

  o.reachable.assign(n, false);
  std::vector<core::LabelId> stack{0};
  o.reachable[0] = true;
  while (!stack.empty()) {
    auto l = stack.back();
    stack.pop_back();
    for (auto s : succ[l]) {
      o.edges.emplace_back(l, s);
      if (!o.reachable[s]) {
        o.reachable[s] = true;
        stack.push_back(s);
      }
    }
  }
  return o;
}

bool satisfies(const Obligations& o, const analysis::AnalysisResults& beta) {
  for (core::LabelId l = 0; l < o.use.size(); ++l) {
    if (!o.reachable[l]) continue;
    for (const auto& v : o.use[l]) {
      if (!beta.at(l).contains(v)) return false;
    }
  }
  for (auto [from, to] : o.edges) {
    for (const auto& v : beta.at(to)) {
      if (!beta.at(from).contains(v) && !o.def[from].contains(v)) return false;
    }
  }
  return true;
}

Leastness check_leastness(const core::Program& p, const analysis::AnalysisResults& beta) {
  const Obligations o = derive_obligations(p);
  const std::size_t n = o.use.size();
  if (n > 20) throw std::invalid_argument("too many labels for enumeration");
  Leastness out;
  out.satisfies = satisfies(o, beta);
  out.minimal = true;

  for (core::LabelId l = 0; l < n; ++l) {
    if (!o.reachable[l] && !beta.at(l).empty()) {
      out.minimal = false;
      out.detail = "unreachable label " + p.label(l).name + " holds variables";
      return out;
    }
  }

  std::uint32_t reach_mask = 0;
  for (core::LabelId l = 0; l < n; ++l)
    if (o.reachable[l]) reach_mask |= 1u << l;

  for (const auto& v : o.variables) {
    std::uint32_t required = 0;
    for (core::LabelId l = 0; l < n; ++l)
      if (o.reachable[l] && o.use[l].contains(v)) required |= 1u << l;
    std::uint32_t current = 0;
    for (core::LabelId l = 0; l < n; ++l)
      if (beta.at(l).contains(v)) current |= 1u << l;

    // Every subset of the reachable labels is a candidate; keep the satisfying ones.
    for (std::uint32_t s = reach_mask;; s = (s - 1) & reach_mask) {
      bool ok = (s & required) == required;
      for (auto [from, to] : o.edges) {
        if (!ok) break;
        if ((s >> to & 1u) && !(s >> from & 1u) && !o.def[from].contains(v)) ok = false;
      }
      if (ok && (s & current) == s && s != current) {
        out.minimal = false;
        out.detail = "variable " + v + " admits a smaller satisfying placement";
        return out;
      }
      if (s == 0) break;
    }
  }
  return out;
}

Leastness check_leastness_joint(const core::Program& p, const analysis::AnalysisResults& beta) {
  const Obligations o = derive_obligations(p);
  std::vector<std::pair<core::LabelId, std::string>> bits;
  for (core::LabelId l = 0; l < beta.size(); ++l)
    for (const auto& v : beta.at(l)) bits.emplace_back(l, v);
  if (bits.size() > 20) throw std::invalid_argument("too many bits for joint enumeration");

  Leastness out;
  out.satisfies = satisfies(o, beta);
  out.minimal = true;
  const std::uint32_t full = (1u << bits.size()) - 1;
  for (std::uint32_t keep = 0; keep < full; ++keep) {
    analysis::AnalysisResults candidate(beta.size());
    for (std::size_t b = 0; b < bits.size(); ++b)
      if (keep >> b & 1u) candidate.at(bits[b].first).insert(bits[b].second);
    if (satisfies(o, candidate)) {
      out.minimal = false;
      out.detail = "a strictly smaller assignment with " + std::to_string(std::popcount(keep)) +
                   " entries satisfies every obligation";
      return out;
    }
  }
  return out;
}

}  // namespace prophecy::testing
