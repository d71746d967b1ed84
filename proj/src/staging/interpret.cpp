#include "prophecy/staging/interpret.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <unordered_map>
#include <variant>

#include "prophecy/staging/emit.hpp"

namespace prophecy::staging {

namespace {

struct Ptr {
  int buffer = -1;
};

using Value = std::variant<std::monostate, std::int64_t, float, bool, Ptr>;

enum class Space { host, device, unified };

struct Buffer {
  std::vector<float> data;
  std::vector<std::uint8_t> init;
  Space space = Space::host;
  bool freed = false;
  std::string origin;
};

const char* space_name(Space s) {
  switch (s) {
    case Space::host:
      return "host";
    case Space::device:
      return "device";
    case Space::unified:
      return "unified";
  }
  return "?";
}

[[noreturn]] void fail(const std::string& msg, const Stmt* at) {
  throw InterpError(at ? msg + " in `" + describe(*at) + "`" : msg);
}

std::int64_t wrap(std::uint64_t v) { return static_cast<std::int64_t>(v); }

// Slot numbering for every name the program binds.
struct Layout {
  std::unordered_map<std::string, int> slot;
  std::vector<Type> types;

  int add(const std::string& name, Type t) {
    auto [it, fresh] = slot.emplace(name, static_cast<int>(types.size()));
    if (fresh) types.push_back(t);
    return it->second;
  }

  void scan(const Block& b, std::vector<int>* kernel_locals) {
    for (const auto& s : b) {
      if (const auto* d = std::get_if<Declare>(&s.node)) {
        int id = add(d->name, d->type);
        if (kernel_locals) kernel_locals->push_back(id);
      } else if (const auto* f = std::get_if<For>(&s.node)) {
        int id = add(f->var, Type::int_);
        if (kernel_locals) kernel_locals->push_back(id);
        scan(f->body, kernel_locals);
      } else if (const auto* i = std::get_if<If>(&s.node)) {
        scan(i->then_body, kernel_locals);
        scan(i->else_body, kernel_locals);
      } else if (const auto* k = std::get_if<Kernel>(&s.node)) {
        if (kernel_locals) fail("nested kernel", &s);
        std::vector<int>& locals = kernels[&s];
        locals.push_back(add(k->bid, Type::int_));
        locals.push_back(add(k->tid, Type::int_));
        scan(k->body, &locals);
      }
    }
  }

  std::unordered_map<const Stmt*, std::vector<int>> kernels;
};

struct Frame {
  std::vector<Value>* host = nullptr;
  std::vector<Value>* locals = nullptr;     // set inside a kernel thread
  const std::vector<int>* local_of = nullptr;  // slot -> index in locals, or -1
  const Stmt* at = nullptr;
};

class Machine {
 public:
  Machine(const SecondStageProgram& prog, const InterpOptions& opts) : prog_(prog), opts_(opts) {
    layout_.scan(prog.body, nullptr);
    for (const auto& p : prog.params) layout_.add(p.name, p.type);
  }

  InterpOutputs run(const InterpInputs& in) {
    std::vector<Value> host(layout_.types.size());
    for (const auto& p : prog_.params) {
      const int s = layout_.slot.at(p.name);
      if (p.type == Type::float_ptr) {
        auto it = in.buffers.find(p.name);
        if (it == in.buffers.end()) throw InterpError("missing input buffer " + p.name);
        Buffer b;
        b.data = it->second;
        b.init.assign(b.data.size(), 1);
        b.origin = p.name;
        buffers_.push_back(std::move(b));
        host[s] = Ptr{static_cast<int>(buffers_.size() - 1)};
      } else {
        auto it = in.scalars.find(p.name);
        if (it == in.scalars.end()) throw InterpError("missing input scalar " + p.name);
        if (p.type == Type::int_) host[s] = static_cast<std::int64_t>(it->second);
        if (p.type == Type::float_) host[s] = static_cast<float>(it->second);
        if (p.type == Type::bool_) host[s] = it->second != 0.0;
      }
    }

    Frame f{&host, nullptr, nullptr, nullptr};
    exec_block(prog_.body, f);

    for (const auto& p : prog_.params) {
      const Value& v = host[layout_.slot.at(p.name)];
      if (p.type == Type::float_ptr) {
        out_.buffers[p.name] = buffers_[std::get<Ptr>(v).buffer].data;
      } else if (const auto* i = std::get_if<std::int64_t>(&v)) {
        out_.scalars[p.name] = static_cast<double>(*i);
      } else if (const auto* x = std::get_if<float>(&v)) {
        out_.scalars[p.name] = *x;
      } else if (const auto* b = std::get_if<bool>(&v)) {
        out_.scalars[p.name] = *b ? 1.0 : 0.0;
      }
    }
    return std::move(out_);
  }

 private:
  // ---- variables ----
  Value& slot_ref(const std::string& name, Frame& f, bool writing) {
    auto it = layout_.slot.find(name);
    if (it == layout_.slot.end()) fail("undeclared variable " + name, f.at);
    const int s = it->second;
    if (f.locals) {
      const int li = (*f.local_of)[s];
      if (li >= 0) return (*f.locals)[li];
      if (writing) fail("kernel thread writes host variable " + name, f.at);
    }
    return (*f.host)[s];
  }

  // ---- buffers ----
  Buffer& buffer_for(const Value& v, Frame& f, const char* what) {
    const auto* p = std::get_if<Ptr>(&v);
    if (!p || p->buffer < 0) fail(std::string(what) + " through a non-pointer", f.at);
    Buffer& b = buffers_[p->buffer];
    if (b.freed) fail(std::string(what) + " of freed buffer " + b.origin, f.at);
    if (f.locals && b.space == Space::host) fail(std::string(what) + " of host buffer " + b.origin + " in a kernel", f.at);
    if (!f.locals && b.space == Space::device)
      fail(std::string(what) + " of device buffer " + b.origin + " outside a kernel", f.at);
    return b;
  }

  std::size_t element(const Buffer& b, std::int64_t i, Frame& f, const char* what) {
    if (i < 0 || static_cast<std::uint64_t>(i) >= b.data.size()) {
      fail(std::string("out-of-bounds ") + what + " " + b.origin + "[" + std::to_string(i) + "] (size " +
               std::to_string(b.data.size()) + ")",
           f.at);
    }
    return static_cast<std::size_t>(i);
  }

  // ---- expressions ----
  static bool truthy(const Value& v, Frame& f) {
    if (const auto* b = std::get_if<bool>(&v)) return *b;
    if (const auto* i = std::get_if<std::int64_t>(&v)) return *i != 0;
    if (const auto* x = std::get_if<float>(&v)) return *x != 0.0f;
    fail("condition is not a scalar", f.at);
  }

  static float as_float(const Value& v, Frame& f) {
    if (const auto* x = std::get_if<float>(&v)) return *x;
    if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<float>(*i);
    if (const auto* b = std::get_if<bool>(&v)) return *b ? 1.0f : 0.0f;
    fail("expected a number", f.at);
  }

  static std::int64_t as_int(const Value& v, Frame& f) {
    if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
    if (const auto* b = std::get_if<bool>(&v)) return *b ? 1 : 0;
    if (const auto* x = std::get_if<float>(&v)) return static_cast<std::int64_t>(*x);
    fail("expected an integer", f.at);
  }

  Value convert(Value v, Type t, Frame& f) {
    if (std::holds_alternative<std::monostate>(v)) fail("use of an uninitialized value", f.at);
    switch (t) {
      case Type::int_:
        return as_int(v, f);
      case Type::float_:
        return as_float(v, f);
      case Type::bool_:
        return truthy(v, f);
      case Type::float_ptr:
        if (!std::holds_alternative<Ptr>(v)) fail("expected a pointer", f.at);
        return v;
      case Type::void_:
        break;
    }
    fail("void value", f.at);
  }

  Value eval(const Expr& e, Frame& f) {
    switch (e->kind) {
      case ExprNode::Kind::int_lit:
        return e->int_value;
      case ExprNode::Kind::float_lit:
        return e->float_value;
      case ExprNode::Kind::bool_lit:
        return e->bool_value;
      case ExprNode::Kind::var: {
        Value v = slot_ref(e->name, f, false);
        if (std::holds_alternative<std::monostate>(v)) fail("read of uninitialized variable " + e->name, f.at);
        return v;
      }
      case ExprNode::Kind::index: {
        Buffer& b = buffer_for(eval(e->args[0], f), f, "read");
        const std::size_t i = element(b, as_int(eval(e->args[1], f), f), f, "read");
        if (!b.init[i]) fail("read of uninitialized element " + b.origin + "[" + std::to_string(i) + "]", f.at);
        return b.data[i];
      }
      case ExprNode::Kind::unary: {
        Value v = eval(e->args[0], f);
        if (e->op == Op::lnot) return !truthy(v, f);
        if (const auto* i = std::get_if<std::int64_t>(&v)) return wrap(0u - static_cast<std::uint64_t>(*i));
        return -as_float(v, f);
      }
      case ExprNode::Kind::binary:
        return eval_binary(e->op, eval(e->args[0], f), eval(e->args[1], f), f);
      case ExprNode::Kind::call:
        return call(e->name, e->args, f);
    }
    fail("bad expression", f.at);
  }

  Value eval_binary(Op op, const Value& a, const Value& b, Frame& f) {
    if (op == Op::land) return truthy(a, f) && truthy(b, f);
    if (op == Op::lor) return truthy(a, f) || truthy(b, f);
    const bool ints = !std::holds_alternative<float>(a) && !std::holds_alternative<float>(b);
    if (ints) {
      const std::int64_t x = as_int(a, f), y = as_int(b, f);
      const auto ux = static_cast<std::uint64_t>(x), uy = static_cast<std::uint64_t>(y);
      switch (op) {
        case Op::add:
          return wrap(ux + uy);
        case Op::sub:
          return wrap(ux - uy);
        case Op::mul:
          return wrap(ux * uy);
        case Op::div:
        case Op::mod:
          if (y == 0) fail("integer division by zero", f.at);
          if (x == std::numeric_limits<std::int64_t>::min() && y == -1) return op == Op::div ? x : std::int64_t{0};
          return op == Op::div ? x / y : x % y;
        case Op::lt:
          return x < y;
        case Op::le:
          return x <= y;
        case Op::gt:
          return x > y;
        case Op::ge:
          return x >= y;
        case Op::eq:
          return x == y;
        case Op::ne:
          return x != y;
        default:
          break;
      }
    } else {
      const float x = as_float(a, f), y = as_float(b, f);
      switch (op) {
        case Op::add:
          return x + y;
        case Op::sub:
          return x - y;
        case Op::mul:
          return x * y;
        case Op::div:
          return x / y;
        case Op::lt:
          return x < y;
        case Op::le:
          return x <= y;
        case Op::gt:
          return x > y;
        case Op::ge:
          return x >= y;
        case Op::eq:
          return x == y;
        case Op::ne:
          return x != y;
        default:
          break;
      }
    }
    fail(std::string("operator ") + to_string(op) + " on these operands", f.at);
  }

  std::size_t byte_count(const Value& v, Frame& f) {
    const std::int64_t bytes = as_int(v, f);
    if (bytes < 0 || bytes % static_cast<std::int64_t>(sizeof(float)) != 0)
      fail("byte count " + std::to_string(bytes) + " is not a whole number of floats", f.at);
    return static_cast<std::size_t>(bytes) / sizeof(float);
  }

  Value allocate(Space space, const Value& bytes, Frame& f, const std::string& callee) {
    const std::size_t n = byte_count(bytes, f);
    if (n == 0) fail("empty allocation", f.at);
    Buffer b;
    b.data.assign(n, 0.0f);
    b.init.assign(n, 0);
    b.space = space;
    b.origin = callee + "#" + std::to_string(buffers_.size());
    buffers_.push_back(std::move(b));
    return Ptr{static_cast<int>(buffers_.size() - 1)};
  }

  void copy(const std::vector<Value>& a, Frame& f, Space dst_space, Space src_space, bool either) {
    const auto* d = std::get_if<Ptr>(&a[0]);
    const auto* s = std::get_if<Ptr>(&a[1]);
    if (!d || !s || d->buffer < 0 || s->buffer < 0) fail("copy between non-pointers", f.at);
    Buffer& dst = buffers_[d->buffer];
    Buffer& src = buffers_[s->buffer];
    if (dst.freed || src.freed) fail("copy involving a freed buffer", f.at);
    if (!either && (dst.space != dst_space || src.space != src_space)) {
      fail(std::string("copy from ") + space_name(src.space) + " to " + space_name(dst.space) + " buffer", f.at);
    }
    const std::size_t n = byte_count(a[2], f);
    if (n > dst.data.size() || n > src.data.size()) fail("copy past the end of a buffer", f.at);
    std::copy_n(src.data.begin(), n, dst.data.begin());
    std::copy_n(src.init.begin(), n, dst.init.begin());
  }

  Value call(const std::string& callee, const std::vector<Expr>& args, Frame& f) {
    if (!find_runtime(callee)) fail("unknown runtime function " + callee, f.at);
    std::vector<Value> a;
    a.reserve(args.size());
    for (const auto& e : args) a.push_back(eval(e, f));
    if (callee == "runtime::grid_sync") {
      if (f.locals) fail("grid_sync inside kernel control flow", f.at);
      return {};
    }
    if (f.locals) fail(callee + " inside a kernel", f.at);
    if (callee == "runtime::malloc") return allocate(Space::host, a[0], f, callee);
    if (callee == "runtime::cuda_malloc") return allocate(Space::device, a[0], f, callee);
    if (callee == "runtime::unified_malloc") return allocate(Space::unified, a[0], f, callee);
    if (callee == "runtime::free") {
      buffer_for(a[0], f, "free").freed = true;
      return {};
    }
    if (callee == "runtime::memcpy") {
      copy(a, f, Space::host, Space::host, true);
      return {};
    }
    if (callee == "runtime::cudaMemcpyToDevice") {
      copy(a, f, Space::device, Space::host, false);
      return {};
    }
    if (callee == "runtime::cudaMemcpyToHost") {
      copy(a, f, Space::host, Space::device, false);
      return {};
    }
    if (callee == "runtime::consume_tensor") {
      Buffer& b = buffer_for(a[0], f, "consume");
      for (std::size_t i = 0; i < b.init.size(); ++i)
        if (!b.init[i]) fail("consumed tensor " + b.origin + " has uninitialized element " + std::to_string(i), f.at);
      out_.buffers["consumed#" + std::to_string(out_.consumed++)] = b.data;
      return {};
    }
    return {};  // start_time, end_time
  }

  // ---- statements ----
  // Returns true when a return statement ran.
  bool exec_block(const Block& b, Frame& f) {
    for (const auto& s : b)
      if (exec(s, f)) return true;
    return false;
  }

  bool exec(const Stmt& s, Frame& f) {
    const Stmt* saved = f.at;
    f.at = &s;
    bool returned = false;
    if (const auto* d = std::get_if<Declare>(&s.node)) {
      Value v = d->init ? convert(eval(*d->init, f), d->type, f) : Value{};
      slot_ref(d->name, f, true) = v;
    } else if (const auto* a = std::get_if<Assign>(&s.node)) {
      assign(*a, f);
    } else if (const auto* loop = std::get_if<For>(&s.node)) {
      returned = exec_for(*loop, f);
    } else if (const auto* i = std::get_if<If>(&s.node)) {
      returned = exec_block(truthy(eval(i->cond, f), f) ? i->then_body : i->else_body, f);
    } else if (const auto* c = std::get_if<Call>(&s.node)) {
      call(c->callee, c->args, f);
    } else if (const auto* r = std::get_if<Return>(&s.node)) {
      if (f.locals) fail("return inside a kernel", f.at);
      if (r->value) eval(*r->value, f);
      returned = true;
    } else if (const auto* k = std::get_if<Kernel>(&s.node)) {
      launch(s, *k, f);
    }
    f.at = saved;
    return returned;
  }

  void assign(const Assign& a, Frame& f) {
    Value rhs = eval(a.rhs, f);
    if (a.lhs->kind == ExprNode::Kind::var) {
      Value& slot = slot_ref(a.lhs->name, f, true);
      slot = convert(std::move(rhs), a.lhs->type, f);
    } else if (a.lhs->kind == ExprNode::Kind::index) {
      Buffer& b = buffer_for(eval(a.lhs->args[0], f), f, "write");
      const std::size_t i = element(b, as_int(eval(a.lhs->args[1], f), f), f, "write");
      b.data[i] = as_float(rhs, f);
      b.init[i] = 1;
    } else {
      fail("assignment to a non-lvalue", f.at);
    }
  }

  bool exec_for(const For& loop, Frame& f) {
    Value& var = slot_ref(loop.var, f, true);
    var = as_int(eval(loop.init, f), f);
    for (;;) {
      Value& cur = slot_ref(loop.var, f, false);
      if (!(std::get<std::int64_t>(cur) < as_int(eval(loop.bound, f), f))) break;
      if (exec_block(loop.body, f)) return true;
      const std::int64_t step = as_int(eval(loop.step, f), f);
      if (step <= 0) fail("loop step must be positive", f.at);
      Value& after = slot_ref(loop.var, f, true);
      after = wrap(static_cast<std::uint64_t>(std::get<std::int64_t>(after)) + static_cast<std::uint64_t>(step));
    }
    return false;
  }

  void launch(const Stmt& s, const Kernel& k, Frame& f) {
    ++out_.kernel_launches;
    const std::vector<int>& locals = layout_.kernels.at(&s);
    std::vector<int> local_of(layout_.types.size(), -1);
    for (std::size_t i = 0; i < locals.size(); ++i) local_of[locals[i]] = static_cast<int>(i);

    std::vector<std::vector<const Stmt*>> phases(1);
    for (const auto& st : k.body) {
      const auto* c = std::get_if<Call>(&st.node);
      if (c && c->callee == "runtime::grid_sync") {
        phases.emplace_back();
      } else {
        phases.back().push_back(&st);
      }
    }

    const std::int64_t total = k.blocks * k.threads;
    std::vector<std::vector<Value>> thread_locals(static_cast<std::size_t>(total), std::vector<Value>(locals.size()));
    for (std::int64_t t = 0; t < total; ++t) {
      thread_locals[t][0] = t / k.threads;
      thread_locals[t][1] = t % k.threads;
    }

    for (const auto& phase : phases) {
      if (phase.empty()) continue;
      auto body = [&](std::int64_t t) {
        Frame tf{f.host, &thread_locals[t], &local_of, &s};
        for (const Stmt* st : phase) exec(*st, tf);
      };
      if (opts_.execution == KernelExecution::serial) {
        for (std::int64_t t = 0; t < total; ++t) body(t);
        continue;
      }
      std::int64_t failed_at = total;
      std::string message;
#pragma omp parallel for schedule(static)
      for (std::int64_t t = 0; t < total; ++t) {
        try {
          body(t);
        } catch (const std::exception& e) {
#pragma omp critical(prophecy_interp_error)
          if (t < failed_at) {
            failed_at = t;
            message = e.what();
          }
        }
      }
      if (failed_at < total) throw InterpError(message);
    }
  }

  const SecondStageProgram& prog_;
  InterpOptions opts_;
  Layout layout_;
  std::vector<Buffer> buffers_;
  InterpOutputs out_;
};

}  // namespace

InterpOutputs interpret_program(const SecondStageProgram& prog, const InterpInputs& inputs,
                                const InterpOptions& options) {
  Machine m(prog, options);
  return m.run(inputs);
}

}  // namespace prophecy::staging
