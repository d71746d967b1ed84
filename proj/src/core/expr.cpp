#include "prophecy/core/expr.hpp"

#include <sstream>

namespace prophecy::core {

namespace {

Value wrap_add(Value a, Value b) {
  return static_cast<Value>(static_cast<std::uint64_t>(a) + static_cast<std::uint64_t>(b));
}
Value wrap_sub(Value a, Value b) {
  return static_cast<Value>(static_cast<std::uint64_t>(a) - static_cast<std::uint64_t>(b));
}
Value wrap_mul(Value a, Value b) {
  return static_cast<Value>(static_cast<std::uint64_t>(a) * static_cast<std::uint64_t>(b));
}

void collect(const AExp& e, VarSet& out) {
  switch (e.kind) {
    case AExp::Kind::literal:
      return;
    case AExp::Kind::variable:
      out.insert(e.variable);
      return;
    default:
      collect(*e.lhs, out);
      collect(*e.rhs, out);
  }
}

void collect(const BExp& b, VarSet& out) {
  switch (b.kind) {
    case BExp::Kind::truth:
      return;
    case BExp::Kind::eq:
    case BExp::Kind::le:
      collect(*b.a0, out);
      collect(*b.a1, out);
      return;
    case BExp::Kind::negate:
      collect(*b.b0, out);
      return;
    case BExp::Kind::conj:
    case BExp::Kind::disj:
      collect(*b.b0, out);
      collect(*b.b1, out);
      return;
  }
}

// Evaluation that stops at the first undefined variable; reads are
// accumulated by the caller-provided set.
std::optional<Value> eval_into(const AExp& e, const State& s, VarSet& reads, std::string& missing) {
  switch (e.kind) {
    case AExp::Kind::literal:
      return e.literal;
    case AExp::Kind::variable: {
      auto v = s.find(e.variable);
      if (!v) {
        missing = e.variable;
        return std::nullopt;
      }
      reads.insert(e.variable);
      return v;
    }
    default:
      break;
  }
  auto l = eval_into(*e.lhs, s, reads, missing);
  if (!l) return std::nullopt;
  auto r = eval_into(*e.rhs, s, reads, missing);
  if (!r) return std::nullopt;
  switch (e.kind) {
    case AExp::Kind::add:
      return wrap_add(*l, *r);
    case AExp::Kind::sub:
      return wrap_sub(*l, *r);
    default:
      return wrap_mul(*l, *r);
  }
}

std::optional<bool> eval_into(const BExp& b, const State& s, VarSet& reads, std::string& missing) {
  switch (b.kind) {
    case BExp::Kind::truth:
      return b.truth;
    case BExp::Kind::eq:
    case BExp::Kind::le: {
      auto l = eval_into(*b.a0, s, reads, missing);
      if (!l) return std::nullopt;
      auto r = eval_into(*b.a1, s, reads, missing);
      if (!r) return std::nullopt;
      return b.kind == BExp::Kind::eq ? *l == *r : *l <= *r;
    }
    case BExp::Kind::negate: {
      auto t = eval_into(*b.b0, s, reads, missing);
      if (!t) return std::nullopt;
      return !*t;
    }
    case BExp::Kind::conj:
    case BExp::Kind::disj: {
      auto l = eval_into(*b.b0, s, reads, missing);
      if (!l) return std::nullopt;
      auto r = eval_into(*b.b1, s, reads, missing);
      if (!r) return std::nullopt;
      return b.kind == BExp::Kind::conj ? (*l && *r) : (*l || *r);
    }
  }
  return std::nullopt;
}

int precedence(const AExp& e) {
  switch (e.kind) {
    case AExp::Kind::add:
    case AExp::Kind::sub:
      return 1;
    case AExp::Kind::mul:
      return 2;
    default:
      return 3;
  }
}

int precedence(const BExp& b) {
  switch (b.kind) {
    case BExp::Kind::disj:
      return 1;
    case BExp::Kind::conj:
      return 2;
    case BExp::Kind::negate:
      return 3;
    default:
      return 4;
  }
}

void print(std::ostream& os, const AExp& e) {
  switch (e.kind) {
    case AExp::Kind::literal:
      os << e.literal;
      return;
    case AExp::Kind::variable:
      os << e.variable;
      return;
    default:
      break;
  }
  const int p = precedence(e);
  // Left-associative: the right operand needs parentheses at equal precedence.
  const bool paren_l = precedence(*e.lhs) < p;
  const bool paren_r = precedence(*e.rhs) <= p;
  if (paren_l) os << '(';
  print(os, *e.lhs);
  if (paren_l) os << ')';
  os << (e.kind == AExp::Kind::add ? " + " : e.kind == AExp::Kind::sub ? " - " : " * ");
  if (paren_r) os << '(';
  print(os, *e.rhs);
  if (paren_r) os << ')';
}

void print(std::ostream& os, const BExp& b) {
  switch (b.kind) {
    case BExp::Kind::truth:
      os << (b.truth ? "true" : "false");
      return;
    case BExp::Kind::eq:
    case BExp::Kind::le:
      print(os, *b.a0);
      os << (b.kind == BExp::Kind::eq ? " = " : " <= ");
      print(os, *b.a1);
      return;
    case BExp::Kind::negate: {
      const bool paren = precedence(*b.b0) < precedence(b);
      os << "not ";
      if (paren) os << '(';
      print(os, *b.b0);
      if (paren) os << ')';
      return;
    }
    case BExp::Kind::conj:
    case BExp::Kind::disj: {
      const int p = precedence(b);
      const bool paren_l = precedence(*b.b0) < p;
      const bool paren_r = precedence(*b.b1) <= p;
      if (paren_l) os << '(';
      print(os, *b.b0);
      if (paren_l) os << ')';
      os << (b.kind == BExp::Kind::conj ? " and " : " or ");
      if (paren_r) os << '(';
      print(os, *b.b1);
      if (paren_r) os << ')';
      return;
    }
  }
}

template <typename Ptr>
bool same_child(const Ptr& a, const Ptr& b) {
  if (!a || !b) return !a && !b;
  return *a == *b;
}

}  // namespace

AExp AExp::lit(Value n) {
  AExp e;
  e.kind = Kind::literal;
  e.literal = n;
  return e;
}

AExp AExp::var(std::string name) {
  AExp e;
  e.kind = Kind::variable;
  e.variable = std::move(name);
  return e;
}

AExp AExp::binary(Kind kind, AExp lhs, AExp rhs) {
  AExp e;
  e.kind = kind;
  e.lhs = std::make_shared<const AExp>(std::move(lhs));
  e.rhs = std::make_shared<const AExp>(std::move(rhs));
  return e;
}

AExp operator+(AExp a, AExp b) { return AExp::binary(AExp::Kind::add, std::move(a), std::move(b)); }
AExp operator-(AExp a, AExp b) { return AExp::binary(AExp::Kind::sub, std::move(a), std::move(b)); }
AExp operator*(AExp a, AExp b) { return AExp::binary(AExp::Kind::mul, std::move(a), std::move(b)); }

bool operator==(const AExp& a, const AExp& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case AExp::Kind::literal:
      return a.literal == b.literal;
    case AExp::Kind::variable:
      return a.variable == b.variable;
    default:
      return same_child(a.lhs, b.lhs) && same_child(a.rhs, b.rhs);
  }
}

BExp BExp::constant(bool t) {
  BExp b;
  b.kind = Kind::truth;
  b.truth = t;
  return b;
}

BExp BExp::eq(AExp lhs, AExp rhs) {
  BExp b;
  b.kind = Kind::eq;
  b.a0 = std::make_shared<const AExp>(std::move(lhs));
  b.a1 = std::make_shared<const AExp>(std::move(rhs));
  return b;
}

BExp BExp::le(AExp lhs, AExp rhs) {
  BExp b = eq(std::move(lhs), std::move(rhs));
  b.kind = Kind::le;
  return b;
}

BExp BExp::negate(BExp inner) {
  BExp b;
  b.kind = Kind::negate;
  b.b0 = std::make_shared<const BExp>(std::move(inner));
  return b;
}

BExp BExp::conj(BExp lhs, BExp rhs) {
  BExp b;
  b.kind = Kind::conj;
  b.b0 = std::make_shared<const BExp>(std::move(lhs));
  b.b1 = std::make_shared<const BExp>(std::move(rhs));
  return b;
}

BExp BExp::disj(BExp lhs, BExp rhs) {
  BExp b = conj(std::move(lhs), std::move(rhs));
  b.kind = Kind::disj;
  return b;
}

bool operator==(const BExp& a, const BExp& b) {
  if (a.kind != b.kind) return false;
  if (a.kind == BExp::Kind::truth) return a.truth == b.truth;
  return same_child(a.a0, b.a0) && same_child(a.a1, b.a1) && same_child(a.b0, b.b0) &&
         same_child(a.b1, b.b1);
}

VarSet vars(const AExp& e) {
  VarSet out;
  collect(e, out);
  return out;
}

VarSet vars(const BExp& b) {
  VarSet out;
  collect(b, out);
  return out;
}

std::optional<Value> State::find(std::string_view name) const {
  auto it = values_.find(name);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string to_string(const State& s) {
  std::ostringstream os;
  os << '{';
  bool first = true;
  for (const auto& [k, v] : s.values()) {
    if (!first) os << ", ";
    first = false;
    os << k << ':' << v;
  }
  os << '}';
  return os.str();
}

EvalResult<Value> eval(const AExp& e, const State& s) {
  VarSet reads;
  std::string missing;
  auto v = eval_into(e, s, reads, missing);
  if (!v) return UndefinedVariable{missing};
  return Evaluated<Value>{*v, std::move(reads)};
}

EvalResult<bool> eval(const BExp& b, const State& s) {
  VarSet reads;
  std::string missing;
  auto v = eval_into(b, s, reads, missing);
  if (!v) return UndefinedVariable{missing};
  return Evaluated<bool>{*v, std::move(reads)};
}

std::string to_string(const AExp& e) {
  std::ostringstream os;
  print(os, e);
  return os.str();
}

std::string to_string(const BExp& b) {
  std::ostringstream os;
  print(os, b);
  return os.str();
}

}  // namespace prophecy::core
