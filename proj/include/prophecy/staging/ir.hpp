#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace prophecy::staging {

enum class Type { int_, float_, bool_, float_ptr, void_ };

const char* to_string(Type t);

enum class Op { add, sub, mul, div, mod, lt, le, gt, ge, eq, ne, land, lor, neg, lnot };

const char* to_string(Op op);

struct ExprNode;
using Expr = std::shared_ptr<const ExprNode>;

struct ExprNode {
  enum class Kind { int_lit, float_lit, bool_lit, var, binary, unary, index, call };
  Kind kind = Kind::int_lit;
  Type type = Type::int_;
  std::int64_t int_value = 0;
  float float_value = 0.0f;
  bool bool_value = false;
  std::string name;  // var name or callee
  Op op = Op::add;
  std::vector<Expr> args;  // operands, [base, index], or call arguments
};

Expr int_lit(std::int64_t v);
Expr float_lit(float v);
Expr bool_lit(bool v);
Expr var_ref(std::string name, Type type);
Expr binary(Op op, Expr lhs, Expr rhs);
Expr unary(Op op, Expr operand);
Expr index(Expr base, Expr idx);
Expr call_expr(std::string callee, std::vector<Expr> args, Type result);

bool structurally_equal(const Expr& a, const Expr& b);

struct Stmt;
using Block = std::vector<Stmt>;

struct Declare {
  std::string name;
  Type type = Type::int_;
  std::optional<Expr> init;
};

struct Assign {
  Expr lhs;  // var or index
  Expr rhs;
};

// for (int var = init; var < bound; var = var + step) body
struct For {
  std::string var;
  Expr init;
  Expr bound;
  Expr step;
  Block body;
};

struct If {
  Expr cond;
  Block then_body;
  Block else_body;
};

struct Call {
  std::string callee;
  std::vector<Expr> args;
};

struct Return {
  std::optional<Expr> value;
};

// A cooperative launch over blocks x threads. The body runs once per
// (bid, tid); runtime::grid_sync at the top level of the body is a barrier.
struct Kernel {
  std::string bid;
  std::string tid;
  std::int64_t blocks = 1;
  std::int64_t threads = 1;
  Block body;
};

struct Stmt {
  std::variant<Declare, Assign, For, If, Call, Return, Kernel> node;
};

struct Param {
  std::string name;
  Type type = Type::int_;
};

struct SecondStageProgram {
  std::string name = "generated";
  std::string runtime_header = "prophecy_runtime.h";
  Type return_type = Type::void_;
  std::vector<Param> params;
  Block body;
};

struct RuntimeFunction {
  std::string_view name;
  Type result;
  int arity;
};

// The runtime surface emitted code may call.
const std::vector<RuntimeFunction>& runtime_registry();
const RuntimeFunction* find_runtime(std::string_view name);

class StagingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace prophecy::staging
