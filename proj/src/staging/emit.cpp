#include "prophecy/staging/emit.hpp"

#include <charconv>
#include <sstream>

namespace prophecy::staging {

namespace {

std::string float_text(float v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  std::string s(buf, res.ptr);
  if (s.find_first_of(".en") == std::string::npos) s += ".0";
  return s + "f";
}

std::string operand(const Expr& e) {
  std::string s = emit_expr(e);
  return e->kind == ExprNode::Kind::binary ? "(" + s + ")" : s;
}

void check_callee(const std::string& name) {
  if (!find_runtime(name)) throw StagingError("unknown runtime function " + name);
}

std::string args_text(const std::vector<Expr>& args) {
  std::string out;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i) out += ", ";
    out += emit_expr(args[i]);
  }
  return out;
}

std::string for_header(const std::string& var, const Expr& init, const Expr& bound, const Expr& step) {
  return "for (int " + var + " = " + emit_expr(init) + "; " + var + " < " + emit_expr(bound) + "; " + var + " = " +
         var + " + " + operand(step) + ")";
}

class Printer {
 public:
  explicit Printer(std::ostringstream& os) : os_(os) {}

  void block(const Block& b, int depth) {
    for (const auto& s : b) stmt(s, depth);
  }

  // Writes " {" + body + "}" after a header already on the line.
  void braced(const Block& b, int depth) {
    if (b.empty()) {
      os_ << " {}\n";
      return;
    }
    os_ << " {\n";
    block(b, depth + 1);
    indent(depth);
    os_ << "}\n";
  }

  void stmt(const Stmt& s, int depth) {
    indent(depth);
    if (const auto* d = std::get_if<Declare>(&s.node)) {
      os_ << to_string(d->type) << " " << d->name;
      if (d->init) os_ << " = " << emit_expr(*d->init);
      os_ << ";\n";
    } else if (const auto* a = std::get_if<Assign>(&s.node)) {
      os_ << emit_expr(a->lhs) << " = " << emit_expr(a->rhs) << ";\n";
    } else if (const auto* f = std::get_if<For>(&s.node)) {
      os_ << for_header(f->var, f->init, f->bound, f->step);
      braced(f->body, depth);
    } else if (const auto* i = std::get_if<If>(&s.node)) {
      os_ << "if (" << emit_expr(i->cond) << ")";
      if (i->else_body.empty()) {
        braced(i->then_body, depth);
      } else {
        os_ << " {\n";
        block(i->then_body, depth + 1);
        indent(depth);
        os_ << "} else";
        braced(i->else_body, depth);
      }
    } else if (const auto* c = std::get_if<Call>(&s.node)) {
      check_callee(c->callee);
      os_ << c->callee << "(" << args_text(c->args) << ");\n";
    } else if (const auto* r = std::get_if<Return>(&s.node)) {
      os_ << "return";
      if (r->value) os_ << " " << emit_expr(*r->value);
      os_ << ";\n";
    } else if (const auto* k = std::get_if<Kernel>(&s.node)) {
      os_ << "#pragma prophecy kernel cooperative\n";
      indent(depth);
      os_ << for_header(k->bid, int_lit(0), int_lit(k->blocks), int_lit(1)) << " {\n";
      indent(depth + 1);
      os_ << for_header(k->tid, int_lit(0), int_lit(k->threads), int_lit(1));
      braced(k->body, depth + 1);
      indent(depth);
      os_ << "}\n";
    }
  }

 private:
  void indent(int depth) { os_ << std::string(static_cast<std::size_t>(depth) * 2, ' '); }
  std::ostringstream& os_;
};

}  // namespace

std::string emit_expr(const Expr& e) {
  switch (e->kind) {
    case ExprNode::Kind::int_lit:
      return std::to_string(e->int_value);
    case ExprNode::Kind::float_lit:
      return float_text(e->float_value);
    case ExprNode::Kind::bool_lit:
      return e->bool_value ? "true" : "false";
    case ExprNode::Kind::var:
      return e->name;
    case ExprNode::Kind::binary:
      return operand(e->args[0]) + " " + to_string(e->op) + " " + operand(e->args[1]);
    case ExprNode::Kind::unary:
      return to_string(e->op) + operand(e->args[0]);
    case ExprNode::Kind::index:
      return operand(e->args[0]) + "[" + emit_expr(e->args[1]) + "]";
    case ExprNode::Kind::call:
      check_callee(e->name);
      return e->name + "(" + args_text(e->args) + ")";
  }
  return "?";
}

std::string describe(const Stmt& s) {
  std::ostringstream os;
  if (std::holds_alternative<For>(s.node)) {
    const auto& f = std::get<For>(s.node);
    return for_header(f.var, f.init, f.bound, f.step);
  }
  if (std::holds_alternative<If>(s.node)) return "if (" + emit_expr(std::get<If>(s.node).cond) + ")";
  if (std::holds_alternative<Kernel>(s.node)) return "kernel";
  Printer(os).stmt(s, 0);
  std::string out = os.str();
  if (!out.empty() && out.back() == '\n') out.pop_back();
  return out;
}

std::string emit_c(const SecondStageProgram& prog) {
  std::ostringstream os;
  os << "#include \"" << prog.runtime_header << "\"\n\n";
  os << to_string(prog.return_type) << " " << prog.name << "(";
  for (std::size_t i = 0; i < prog.params.size(); ++i) {
    if (i) os << ", ";
    os << to_string(prog.params[i].type) << " " << prog.params[i].name;
  }
  os << ")";
  Printer(os).braced(prog.body, 0);
  return os.str();
}

}  // namespace prophecy::staging
