#include "prophecy/staging/context.hpp"

namespace prophecy::staging {

Dyn Dyn::operator[](const Dyn& i) const {
  return Dyn(index(expr_, i.expr_), oldest(run_, i.run_), expr_->kind == ExprNode::Kind::var);
}

StageContext::StageContext(std::string function_name, std::string runtime_header)
    : function_name_(std::move(function_name)), runtime_header_(std::move(runtime_header)) {}

void StageContext::begin_run() {
  ++run_;
  ++stats_.runs;
  open_ = true;
  cursor_ = 0;
  next_var_ = 0;
  params_.clear();
  root_.clear();
  stack_.assign(1, &root_);
  kernel_depth_ = 0;
}

SecondStageProgram StageContext::finish_run() {
  require_open();
  if (stack_.size() != 1) throw StagingError("run finished inside an open block");
  open_ = false;
  SecondStageProgram p;
  p.name = function_name_;
  p.runtime_header = runtime_header_;
  p.params = params_;
  p.body = std::move(root_);
  root_.clear();
  for (const auto& s : p.body) {
    if (const auto* r = std::get_if<Return>(&s.node); r && r->value) p.return_type = (*r->value)->type;
  }
  return p;
}

void StageContext::require_open() const {
  if (!open_) throw StagingError("no open first-stage run");
}

void StageContext::check(const Dyn& d) const {
  require_open();
  if (d.run() != 0 && d.run() != run_) throw StagingError("staged handle from an earlier run");
}

std::string StageContext::fresh() { return "var" + std::to_string(next_var_++); }

void StageContext::append(Stmt s) {
  require_open();
  stack_.back()->push_back(std::move(s));
}

Dyn StageContext::param(Type t) {
  require_open();
  if (t == Type::void_) throw StagingError("void parameter");
  std::string name = "arg" + std::to_string(params_.size());
  params_.push_back(Param{name, t});
  return Dyn(var_ref(name, t), run_, true);
}

Dyn StageContext::declare(Type t) {
  if (t == Type::void_) throw StagingError("void variable");
  std::string name = fresh();
  append(Stmt{Declare{name, t, std::nullopt}});
  return Dyn(var_ref(name, t), run_, true);
}

Dyn StageContext::declare(Type t, const Dyn& init) {
  check(init);
  if (t == Type::void_ || init.type() == Type::void_) throw StagingError("void variable");
  if ((t == Type::float_ptr) != (init.type() == Type::float_ptr))
    throw StagingError(std::string("cannot initialize ") + to_string(t) + " from " + to_string(init.type()));
  std::string name = fresh();
  append(Stmt{Declare{name, t, init.expr()}});
  return Dyn(var_ref(name, t), run_, true);
}

void StageContext::assign(const Dyn& lhs, const Dyn& rhs) {
  check(lhs);
  check(rhs);
  if (!lhs.is_lvalue()) throw StagingError("assignment to a non-lvalue");
  if ((lhs.type() == Type::float_ptr) != (rhs.type() == Type::float_ptr))
    throw StagingError(std::string("cannot assign ") + to_string(rhs.type()) + " to " + to_string(lhs.type()));
  append(Stmt{Assign{lhs.expr(), rhs.expr()}});
}

namespace {

const RuntimeFunction& lookup(std::string_view callee, std::size_t arity) {
  const auto* f = find_runtime(callee);
  if (!f) throw StagingError("unknown runtime function " + std::string(callee));
  if (static_cast<std::size_t>(f->arity) != arity)
    throw StagingError(std::string(callee) + " takes " + std::to_string(f->arity) + " arguments");
  return *f;
}

}  // namespace

void StageContext::call(std::string_view callee, std::vector<Dyn> args) {
  lookup(callee, args.size());
  if (kernel_depth_ > 0 && callee != "runtime::grid_sync")
    throw StagingError(std::string(callee) + " cannot be called inside a kernel");
  std::vector<Expr> a;
  for (const auto& d : args) {
    check(d);
    a.push_back(d.expr());
  }
  append(Stmt{Call{std::string(callee), std::move(a)}});
}

Dyn StageContext::call_value(std::string_view callee, std::vector<Dyn> args) {
  const auto& f = lookup(callee, args.size());
  if (f.result == Type::void_) throw StagingError(std::string(callee) + " returns nothing");
  if (kernel_depth_ > 0) throw StagingError(std::string(callee) + " cannot be called inside a kernel");
  std::uint64_t run = 0;
  std::vector<Expr> a;
  for (const auto& d : args) {
    check(d);
    a.push_back(d.expr());
    run = d.run() ? d.run() : run;
  }
  return Dyn(call_expr(std::string(callee), std::move(a), f.result), run ? run : run_);
}

void StageContext::ret(const std::optional<Dyn>& value) {
  if (value) check(*value);
  if (kernel_depth_ > 0) throw StagingError("return inside a kernel");
  append(Stmt{Return{value ? std::optional<Expr>(value->expr()) : std::nullopt}});
}

void StageContext::for_loop(const Dyn& init, const Dyn& bound, const Dyn& step,
                            const std::function<void(const Dyn&)>& body) {
  check(init);
  check(bound);
  check(step);
  for (const auto* e : {&init, &bound, &step}) {
    if (e->type() != Type::int_) throw StagingError("loop bounds must be int");
  }
  For f{fresh(), init.expr(), bound.expr(), step.expr(), {}};
  Dyn var(var_ref(f.var, Type::int_), run_, true);
  stack_.push_back(&f.body);
  body(var);
  stack_.pop_back();
  append(Stmt{std::move(f)});
}

void StageContext::if_else(const Dyn& cond, const std::function<void()>& then_body,
                           const std::function<void()>& else_body) {
  check(cond);
  if (cond.type() == Type::float_ptr) throw StagingError("pointer used as a condition");
  If s{cond.expr(), {}, {}};
  stack_.push_back(&s.then_body);
  if (then_body) then_body();
  stack_.pop_back();
  stack_.push_back(&s.else_body);
  if (else_body) else_body();
  stack_.pop_back();
  append(Stmt{std::move(s)});
}

void StageContext::kernel(std::int64_t blocks, std::int64_t threads,
                          const std::function<void(const Dyn&, const Dyn&)>& body) {
  require_open();
  if (kernel_depth_ > 0) throw StagingError("nested kernel");
  if (blocks <= 0 || threads <= 0) throw StagingError("empty kernel grid");
  Kernel k{fresh(), fresh(), blocks, threads, {}};
  Dyn bid(var_ref(k.bid, Type::int_), run_, false);
  Dyn tid(var_ref(k.tid, Type::int_), run_, false);
  stack_.push_back(&k.body);
  ++kernel_depth_;
  body(bid, tid);
  --kernel_depth_;
  stack_.pop_back();
  append(Stmt{std::move(k)});
}

std::vector<CellInfo> StageContext::cells() const {
  std::vector<CellInfo> out;
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    const auto& c = *cells_[i];
    out.push_back(CellInfo{i, c.lattice(), c.describe(), c.rank(), c.initial_rank});
  }
  return out;
}

StageResult run_staged(const Generator& generator, const StageOptions& options) {
  StageContext ctx(options.function_name, options.runtime_header);
  for (;;) {
    if (ctx.stats().runs >= options.max_runs) {
      throw StagingError("no clean run within " + std::to_string(options.max_runs) + " runs");
    }
    ctx.begin_run();
    try {
      generator(ctx);
    } catch (const MispredictionSignal&) {
      continue;
    }
    StageResult r;
    r.program = ctx.finish_run();
    r.stats = ctx.stats();
    r.cells = ctx.cells();
    return r;
  }
}

}  // namespace prophecy::staging
