#include "prophecy/staging/ir.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "prophecy/staging/lattice.hpp"

namespace prophecy::staging {

namespace {

bool is_float(const Expr& e) { return e->type == Type::float_; }

std::shared_ptr<ExprNode> node(ExprNode::Kind k, Type t) {
  auto n = std::make_shared<ExprNode>();
  n->kind = k;
  n->type = t;
  return n;
}

}  // namespace

const char* to_string(Type t) {
  switch (t) {
    case Type::int_:
      return "int";
    case Type::float_:
      return "float";
    case Type::bool_:
      return "bool";
    case Type::float_ptr:
      return "float*";
    case Type::void_:
      return "void";
  }
  return "?";
}

const char* to_string(Op op) {
  switch (op) {
    case Op::add:
      return "+";
    case Op::sub:
    case Op::neg:
      return "-";
    case Op::mul:
      return "*";
    case Op::div:
      return "/";
    case Op::mod:
      return "%";
    case Op::lt:
      return "<";
    case Op::le:
      return "<=";
    case Op::gt:
      return ">";
    case Op::ge:
      return ">=";
    case Op::eq:
      return "==";
    case Op::ne:
      return "!=";
    case Op::land:
      return "&&";
    case Op::lor:
      return "||";
    case Op::lnot:
      return "!";
  }
  return "?";
}

Expr int_lit(std::int64_t v) {
  auto n = node(ExprNode::Kind::int_lit, Type::int_);
  n->int_value = v;
  return n;
}

Expr float_lit(float v) {
  auto n = node(ExprNode::Kind::float_lit, Type::float_);
  n->float_value = v;
  return n;
}

Expr bool_lit(bool v) {
  auto n = node(ExprNode::Kind::bool_lit, Type::bool_);
  n->bool_value = v;
  return n;
}

Expr var_ref(std::string name, Type type) {
  auto n = node(ExprNode::Kind::var, type);
  n->name = std::move(name);
  return n;
}

Expr binary(Op op, Expr lhs, Expr rhs) {
  Type t = Type::bool_;
  switch (op) {
    case Op::add:
    case Op::sub:
    case Op::mul:
    case Op::div:
      if (lhs->type == Type::float_ptr || rhs->type == Type::float_ptr)
        throw StagingError("pointer arithmetic is not supported");
      t = (is_float(lhs) || is_float(rhs)) ? Type::float_ : Type::int_;
      break;
    case Op::mod:
      if (lhs->type != Type::int_ || rhs->type != Type::int_) throw StagingError("% needs int operands");
      t = Type::int_;
      break;
    case Op::neg:
    case Op::lnot:
      throw StagingError("unary operator used as binary");
    default:
      break;
  }
  auto n = node(ExprNode::Kind::binary, t);
  n->op = op;
  n->args = {std::move(lhs), std::move(rhs)};
  return n;
}

Expr unary(Op op, Expr operand) {
  if (op != Op::neg && op != Op::lnot) throw StagingError("binary operator used as unary");
  auto n = node(ExprNode::Kind::unary, op == Op::lnot ? Type::bool_ : operand->type);
  n->op = op;
  n->args = {std::move(operand)};
  return n;
}

Expr index(Expr base, Expr idx) {
  if (base->type != Type::float_ptr) throw StagingError("indexing a non-pointer");
  if (idx->type != Type::int_) throw StagingError("array index must be int");
  auto n = node(ExprNode::Kind::index, Type::float_);
  n->args = {std::move(base), std::move(idx)};
  return n;
}

Expr call_expr(std::string callee, std::vector<Expr> args, Type result) {
  auto n = node(ExprNode::Kind::call, result);
  n->name = std::move(callee);
  n->args = std::move(args);
  return n;
}

bool structurally_equal(const Expr& a, const Expr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind || a->type != b->type || a->int_value != b->int_value || a->bool_value != b->bool_value ||
      a->name != b->name || a->op != b->op || a->args.size() != b->args.size())
    return false;
  if (a->kind == ExprNode::Kind::float_lit && !(a->float_value == b->float_value)) return false;
  for (std::size_t i = 0; i < a->args.size(); ++i)
    if (!structurally_equal(a->args[i], b->args[i])) return false;
  return true;
}

const std::vector<RuntimeFunction>& runtime_registry() {
  static const std::vector<RuntimeFunction> registry = {
      {"runtime::malloc", Type::float_ptr, 1},
      {"runtime::free", Type::void_, 1},
      {"runtime::memcpy", Type::void_, 3},
      {"runtime::cuda_malloc", Type::float_ptr, 1},
      {"runtime::unified_malloc", Type::float_ptr, 1},
      {"runtime::cudaMemcpyToDevice", Type::void_, 3},
      {"runtime::cudaMemcpyToHost", Type::void_, 3},
      {"runtime::grid_sync", Type::void_, 0},
      {"runtime::start_time", Type::void_, 0},
      {"runtime::end_time", Type::void_, 0},
      {"runtime::consume_tensor", Type::void_, 1},
  };
  return registry;
}

const RuntimeFunction* find_runtime(std::string_view name) {
  const auto& r = runtime_registry();
  auto it = std::find_if(r.begin(), r.end(), [&](const RuntimeFunction& f) { return f.name == name; });
  return it == r.end() ? nullptr : &*it;
}

std::string FalseTop::to_string(const value_type& v) {
  switch (v.level) {
    case Level::Unspecified:
      return "Unspecified";
    case Level::F:
      return "F";
    case Level::T:
      break;
  }
  std::ostringstream os;
  os << "T(" << v.threshold << ")";
  return os.str();
}

}  // namespace prophecy::staging
