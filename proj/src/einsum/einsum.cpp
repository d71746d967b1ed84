#include "prophecy/einsum/einsum.hpp"

#include <algorithm>

namespace prophecy::einsum {

using staging::StagingError;
using staging::Type;

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::prophecy:
      return "prophecy";
    case Strategy::copy_all:
      return "copy-all";
    case Strategy::unified:
      return "unified";
  }
  return "?";
}

std::optional<Strategy> parse_strategy(const std::string& s) {
  if (s == "prophecy") return Strategy::prophecy;
  if (s == "copy-all" || s == "copy_all") return Strategy::copy_all;
  if (s == "unified") return Strategy::unified;
  return std::nullopt;
}

// ---- terms and accesses ----

Term::Term(double v) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::value;
  n->value = static_cast<float>(v);
  node_ = std::move(n);
}

Term::Term(const Access& a) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::access;
  n->tensor = &a.tensor();
  n->indices = a.indices();
  node_ = std::move(n);
}

Term::Term(Index& i) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::index;
  n->indices = {&i};
  node_ = std::move(n);
}

Term::Term(Kind k, const Term& a, const Term& b) {
  auto n = std::make_shared<Node>();
  n->kind = k;
  n->lhs = a.node_;
  n->rhs = b.node_;
  node_ = std::move(n);
}

Access Access::operator[](Index& i) const {
  auto idx = indices_;
  idx.push_back(&i);
  return Access(tensor_, std::move(idx));
}

void Access::operator=(const Term& rhs) const { tensor_->session_->einsum(*this, rhs, Mode::assign); }
void Access::operator=(const Access& rhs) const { tensor_->session_->einsum(*this, Term(rhs), Mode::assign); }
void Access::operator+=(const Term& rhs) const { tensor_->session_->einsum(*this, rhs, Mode::add_assign); }
void Access::operator*=(const Term& rhs) const { tensor_->session_->einsum(*this, rhs, Mode::mul_assign); }

int Tensor::total_size() const {
  int n = 1;
  for (int s : sizes_) n *= s;
  return n;
}

// ---- session ----

namespace {

void check_rank(const Tensor& t, const std::vector<Index*>& idx) {
  if (idx.size() != t.sizes().size()) {
    throw StagingError("tensor " + t.name() + " has rank " + std::to_string(t.sizes().size()) + " but is indexed with " +
                       std::to_string(idx.size()) + " indices");
  }
}

void push_unique(std::vector<Index*>& v, Index* i) {
  if (std::find(v.begin(), v.end(), i) == v.end()) v.push_back(i);
}

}  // namespace

Session::Session(StageContext& ctx, Strategy strategy, Grid grid) : ctx_(ctx), strategy_(strategy), grid_(grid) {
  if (grid_.max_bid <= 0 || grid_.max_tid <= 0) throw StagingError("grid dimensions must be positive");
}

Dyn Session::bytes(const Tensor& t) const { return Dyn(t.total_size() * static_cast<int>(sizeof(float))); }

Tensor& Session::add(const std::string& name, std::vector<int> sizes, const Dyn& host) {
  tensors_.emplace_back(TensorKey{}, this, name, std::move(sizes), host);
  return tensors_.back();
}

Tensor& Session::tensor(const std::string& name, std::vector<int> sizes) {
  return tensor(name, std::move(sizes), Dyn(0));
}

Tensor& Session::tensor(const std::string& name, std::vector<int> sizes, const Dyn& buffer) {
  for (const auto& t : tensors_)
    if (t.name() == name) throw StagingError("duplicate tensor " + name);
  if (sizes.empty()) throw StagingError("tensor " + name + " has no dimensions");
  for (int s : sizes)
    if (s <= 0) throw StagingError("tensor " + name + " has a nonpositive size");
  const bool owned = buffer.type() != Type::float_ptr;
  if (!owned && buffer.expr()->kind != staging::ExprNode::Kind::var)
    throw StagingError("tensor " + name + " needs a named buffer");

  std::optional<staging::Prophecy<TrueTop>> needs;
  if (strategy_ == Strategy::prophecy) {
    needs = ctx_.prophecy<TrueTop>(TrueTop::F);
    cell_labels_[needs->id()] = name + ".needs_gpu";
  }
  Tensor& t = add(name, std::move(sizes), buffer);
  if (needs) t.needs_gpu_ = *needs;
  if (owned) {
    const char* alloc = strategy_ == Strategy::unified ? "runtime::unified_malloc" : "runtime::malloc";
    t.host_ = ctx_.declare(Type::float_ptr, ctx_.call_value(alloc, {bytes(t)}));
  }
  const bool device = strategy_ == Strategy::copy_all ||
                      (strategy_ == Strategy::prophecy && t.needs_gpu_.get() == TrueTop::T);
  if (device) t.device_ = ctx_.declare(Type::float_ptr, ctx_.call_value("runtime::cuda_malloc", {bytes(t)}));
  return t;
}

void Session::run_on_gpu(const std::function<void()>& kernel) {
  if (on_gpu_) throw StagingError("nested GPU context");
  kernels_.emplace_back();

  auto move_to_gpu = [&](Tensor& t) {
    if (!t.device_) throw StagingError("tensor " + t.name() + " has no device buffer");
    ctx_.call("runtime::cudaMemcpyToDevice", {*t.device_, t.host_, bytes(t)});
  };
  auto move_to_host = [&](Tensor& t) {
    if (!t.device_) throw StagingError("tensor " + t.name() + " has no device buffer");
    ctx_.call("runtime::cudaMemcpyToHost", {t.host_, *t.device_, bytes(t)});
  };

  for (auto& t : tensors_) {
    if (strategy_ == Strategy::unified) continue;
    if (strategy_ == Strategy::copy_all) {
      move_to_gpu(t);
      continue;
    }
    t.gpu_written_ = false;
    t.gpu_read_ = ctx_.prophecy<TrueTop>(TrueTop::F);
    cell_labels_[t.gpu_read_->id()] = t.name() + ".gpu_read";
    if (t.gpu_read_->get() == TrueTop::T) move_to_gpu(t);
  }

  on_gpu_ = true;
  ctx_.kernel(grid_.max_bid, grid_.max_tid, [&](const Dyn& bid, const Dyn& tid) {
    bid_ = bid;
    tid_ = tid;
    kernel();
  });
  bid_.reset();
  tid_.reset();
  on_gpu_ = false;

  for (auto& t : tensors_) {
    if (strategy_ == Strategy::unified) continue;
    if (strategy_ == Strategy::copy_all) {
      move_to_host(t);
      continue;
    }
    if (t.gpu_written_.get()) move_to_host(t);
    t.gpu_read_.reset();
    t.gpu_written_ = false;
  }
}

Dyn Session::flat_index(const Tensor& t, const std::vector<Index*>& idx) const {
  // row-major: stride(p) * i_p + flat(p + 1)
  std::function<Dyn(std::size_t)> flat = [&](std::size_t p) -> Dyn {
    const Index& ix = *idx[p];
    if (!ix.it_) throw StagingError("index " + ix.name() + " used outside its loop");
    if (p + 1 == idx.size()) return *ix.it_;
    int after = 1;
    for (std::size_t q = p + 1; q < t.sizes().size(); ++q) after *= t.sizes()[q];
    return Dyn(after) * *ix.it_ + flat(p + 1);
  };
  return flat(0);
}

Dyn Session::read(Tensor& t, const std::vector<Index*>& idx) {
  check_rank(t, idx);
  if (on_gpu_ && strategy_ != Strategy::unified) {
    if (strategy_ == Strategy::prophecy) {
      t.needs_gpu_.require(TrueTop::T);
      t.gpu_read_->require(TrueTop::T);
    }
    if (!t.device_) throw StagingError("tensor " + t.name() + " has no device buffer");
    return (*t.device_)[flat_index(t, idx)];
  }
  return t.host_[flat_index(t, idx)];
}

Dyn Session::value(const Term::Node& n) {
  switch (n.kind) {
    case Term::Kind::value:
      return Dyn(n.value);
    case Term::Kind::index: {
      const Index& ix = *n.indices[0];
      if (!ix.it_) throw StagingError("index " + ix.name() + " used outside its loop");
      return *ix.it_;
    }
    case Term::Kind::access:
      return read(*n.tensor, n.indices);
    case Term::Kind::sum:
    case Term::Kind::product: {
      // left operand first, so cells are required in source order
      Dyn a = value(*n.lhs);
      Dyn b = value(*n.rhs);
      return n.kind == Term::Kind::sum ? a + b : a * b;
    }
  }
  throw StagingError("bad einsum term");
}

void Session::lower_rhs(const std::vector<Index*>& red, std::size_t ind, Mode mode, const Term& rhs, const Dyn& acc) {
  if (ind == red.size()) {
    Dyn v = value(*rhs.node_);
    ctx_.assign(acc, mode == Mode::mul_assign ? acc * v : acc + v);
    return;
  }
  ctx_.for_loop(0, red[ind]->range_, 1, [&](const Dyn& i) {
    red[ind]->it_ = i;
    lower_rhs(red, ind + 1, mode, rhs, acc);
  });
  red[ind]->it_.reset();
}

void Session::lower_lhs(const Access& lhs, const std::vector<Index*>& lhs_idx, std::size_t ind, Mode mode,
                        const std::vector<Index*>& red, const Term& rhs) {
  Tensor& t = lhs.tensor();
  if (ind == lhs_idx.size()) {
    Dyn buffer = t.host_;
    if (on_gpu_ && strategy_ != Strategy::unified) {
      if (strategy_ == Strategy::prophecy) {
        t.needs_gpu_.require(TrueTop::T);
        t.gpu_written_ = true;
      }
      if (!t.device_) throw StagingError("tensor " + t.name() + " has no device buffer");
      buffer = *t.device_;
    }
    if (mode == Mode::assign) {
      Dyn v = value(*rhs.node_);
      ctx_.assign(buffer[flat_index(t, lhs.indices())], v);
      return;
    }
    Dyn acc = ctx_.declare(Type::float_, mode == Mode::mul_assign ? 1.0f : 0.0f);
    lower_rhs(red, 0, mode, rhs, acc);
    ctx_.assign(buffer[flat_index(t, lhs.indices())], acc);
    return;
  }

  if (on_gpu_) {
    const int stride = grid_.max_bid * grid_.max_tid;
    if (lhs_idx.size() == 1) {
      Dyn thread = ctx_.declare(Type::int_, *bid_ * grid_.max_tid + *tid_);
      ctx_.for_loop(thread, lhs_idx[0]->range_, stride, [&](const Dyn& i) {
        lhs_idx[0]->it_ = i;
        lower_lhs(lhs, lhs_idx, 1, mode, red, rhs);
      });
      lhs_idx[0]->it_.reset();
      ctx_.call("runtime::grid_sync", {});
      return;
    }
    if (ind == 0) {
      ctx_.for_loop(*bid_, lhs_idx[0]->range_, grid_.max_bid, [&](const Dyn& i) {
        lhs_idx[0]->it_ = i;
        ctx_.for_loop(*tid_, lhs_idx[1]->range_, grid_.max_tid, [&](const Dyn& j) {
          lhs_idx[1]->it_ = j;
          lower_lhs(lhs, lhs_idx, 2, mode, red, rhs);
        });
      });
      lhs_idx[0]->it_.reset();
      lhs_idx[1]->it_.reset();
      ctx_.call("runtime::grid_sync", {});
      return;
    }
  }

  ctx_.for_loop(0, lhs_idx[ind]->range_, 1, [&](const Dyn& i) {
    lhs_idx[ind]->it_ = i;
    lower_lhs(lhs, lhs_idx, ind + 1, mode, red, rhs);
  });
  lhs_idx[ind]->it_.reset();
}

void Session::einsum(const Access& lhs, const Term& rhs, Mode mode) {
  check_rank(lhs.tensor(), lhs.indices());

  std::vector<std::pair<Tensor*, std::vector<Index*>>> accesses;
  std::vector<Index*> rhs_idx;
  std::function<void(const Term::Node&)> walk = [&](const Term::Node& n) {
    switch (n.kind) {
      case Term::Kind::access:
        check_rank(*n.tensor, n.indices);
        accesses.emplace_back(n.tensor, n.indices);
        for (auto* i : n.indices) push_unique(rhs_idx, i);
        break;
      case Term::Kind::index:
        push_unique(rhs_idx, n.indices[0]);
        break;
      case Term::Kind::sum:
      case Term::Kind::product:
        walk(*n.lhs);
        walk(*n.rhs);
        break;
      case Term::Kind::value:
        break;
    }
  };
  walk(*rhs.node_);

  std::vector<Index*> lhs_idx;
  for (auto* i : lhs.indices()) push_unique(lhs_idx, i);
  for (auto* i : lhs_idx) i->range_ = -1;
  for (auto* i : rhs_idx) i->range_ = -1;

  auto bind = [](Tensor& t, const std::vector<Index*>& idx) {
    for (std::size_t p = 0; p < idx.size(); ++p) {
      Index& ix = *idx[p];
      if (ix.range_ != -1 && ix.range_ != t.sizes()[p]) {
        throw StagingError("index " + ix.name() + " ranges over both " + std::to_string(ix.range_) + " and " +
                           std::to_string(t.sizes()[p]) + " (dimension " + std::to_string(p) + " of " + t.name() +
                           ")");
      }
      ix.range_ = t.sizes()[p];
    }
  };
  bind(lhs.tensor(), lhs.indices());
  for (auto& [t, idx] : accesses) bind(*t, idx);
  for (auto* i : rhs_idx)
    if (i->range_ == -1) throw StagingError("index " + i->name() + " has no range");

  std::vector<Index*> red;
  for (auto* i : rhs_idx)
    if (std::find(lhs_idx.begin(), lhs_idx.end(), i) == lhs_idx.end()) red.push_back(i);
  if (mode == Mode::assign && !red.empty())
    throw StagingError("plain assignment cannot reduce over index " + red[0]->name());

  if (on_gpu_) {
    auto& k = kernels_.back();
    for (auto& [t, idx] : accesses) k.reads.insert(t->name());
    k.writes.insert(lhs.tensor().name());
  }

  lower_lhs(lhs, lhs_idx, 0, mode, red, rhs);
}

// ---- benchmarks ----

namespace {

std::string function_name(Strategy s) {
  switch (s) {
    case Strategy::copy_all:
      return "benchmark_copy_all";
    case Strategy::unified:
      return "benchmark_unified";
    default:
      return "benchmark";
  }
}

using KernelBody = std::function<void(Tensor& x, Tensor& y, Tensor& z, Index& i, Index& j, Index& k)>;

Access whole(Tensor& t, Index& i, Index& j) { return t.sizes().size() == 1 ? t[i] : t[i][j]; }

BenchmarkResult build_six(const std::vector<int>& xs, const std::vector<int>& ys, const std::vector<int>& zs,
                          const BenchmarkOptions& opts, const KernelBody& body) {
  if (opts.iterations <= 0) throw StagingError("iterations must be positive");
  BenchmarkResult out;
  out.strategy = opts.strategy;

  auto gen = [&](StageContext& ctx) {
    Session s(ctx, opts.strategy, opts.grid);
    Index i("i"), j("j"), k("k");
    Dyn px = ctx.param(Type::float_ptr);
    Dyn py = ctx.param(Type::float_ptr);
    Dyn pz = ctx.param(Type::float_ptr);

    auto& x = s.tensor("x", xs);
    auto& x_b = s.tensor("x_b", xs, px);
    auto& y = s.tensor("y", ys);
    auto& y_b = s.tensor("y_b", ys, py);
    auto& z = s.tensor("z", zs);
    // temporary to read data into
    auto& z_b = s.tensor("z_b", zs, pz);

    ctx.for_loop(0, opts.iterations, 1, [&](const Dyn&) {
      whole(x, i, j) = whole(x_b, i, j);
      whole(y, i, j) = whole(y_b, i, j);
      ctx.call("runtime::start_time", {});
      s.run_on_gpu([&] { body(x, y, z, i, j, k); });
      whole(z_b, i, j) = whole(z, i, j);
      ctx.call("runtime::end_time", {});
    });

    // only a run that gets here is the final one
    out.tensors.clear();
    out.var_tensor.clear();
    out.buffers.clear();
    for (const auto& t : s.tensors()) {
      out.tensors.push_back(t.name());
      out.var_tensor[t.host().expr()->name] = t.name();
      if (t.device()) out.var_tensor[t.device()->expr()->name] = t.name();
    }
    out.buffers = {{"arg0", "x_b", static_cast<std::size_t>(x_b.total_size())},
                   {"arg1", "y_b", static_cast<std::size_t>(y_b.total_size())},
                   {"arg2", "z_b", static_cast<std::size_t>(z_b.total_size())}};
    out.kernels = s.kernels();
    out.cell_labels = s.cell_labels();
  };

  staging::StageOptions so;
  so.max_runs = opts.max_runs;
  so.function_name = function_name(opts.strategy);
  so.runtime_header = "el_runtime.h";
  out.staged = staging::run_staged(gen, so);
  out.movement = scan_movement(out.staged.program, out.var_tensor);
  return out;
}

}  // namespace

BenchmarkResult build_matmul_benchmark(int M, int N, int O, const BenchmarkOptions& opts) {
  if (M <= 0 || N <= 0 || O <= 0) throw StagingError("matmul sizes must be positive");
  return build_six({M, N}, {N, O}, {M, O}, opts,
                   [](Tensor& x, Tensor& y, Tensor& z, Index& i, Index& j, Index& k) { z[i][j] += x[i][k] * y[k][j]; });
}

BenchmarkResult build_matvec_benchmark(int M, int N, const BenchmarkOptions& opts) {
  if (M <= 0 || N <= 0) throw StagingError("matvec sizes must be positive");
  return build_six({M, N}, {N}, {M}, opts,
                   [](Tensor& x, Tensor& y, Tensor& z, Index& i, Index&, Index& k) { z[i] += x[i][k] * y[k]; });
}

Movement scan_movement(const staging::SecondStageProgram& prog, const std::map<std::string, std::string>& var_tensor) {
  Movement m;
  auto tensor_of = [&](const staging::Expr& e) -> std::string {
    if (e->kind != staging::ExprNode::Kind::var) return "?";
    auto it = var_tensor.find(e->name);
    return it == var_tensor.end() ? e->name : it->second;
  };
  std::function<void(const staging::Block&)> walk = [&](const staging::Block& b) {
    for (const auto& s : b) {
      if (const auto* d = std::get_if<staging::Declare>(&s.node)) {
        if (!d->init || (*d->init)->kind != staging::ExprNode::Kind::call) continue;
        auto it = var_tensor.find(d->name);
        const std::string t = it == var_tensor.end() ? d->name : it->second;
        if ((*d->init)->name == "runtime::cuda_malloc") m.device_allocated.insert(t);
        if ((*d->init)->name == "runtime::unified_malloc") m.unified_allocated.insert(t);
      } else if (const auto* c = std::get_if<staging::Call>(&s.node)) {
        if (c->callee == "runtime::cudaMemcpyToDevice") {
          m.copied_in.insert(tensor_of(c->args[0]));
          ++m.copy_in_calls;
        } else if (c->callee == "runtime::cudaMemcpyToHost") {
          m.copied_out.insert(tensor_of(c->args[0]));
          ++m.copy_out_calls;
        }
      } else if (const auto* f = std::get_if<staging::For>(&s.node)) {
        walk(f->body);
      } else if (const auto* i = std::get_if<staging::If>(&s.node)) {
        walk(i->then_body);
        walk(i->else_body);
      } else if (const auto* k = std::get_if<staging::Kernel>(&s.node)) {
        walk(k->body);
      }
    }
  };
  walk(prog.body);
  return m;
}

staging::InterpInputs random_inputs(const BenchmarkResult& r, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  staging::InterpInputs in;
  for (const auto& b : r.buffers) {
    auto& v = in.buffers[b.name];
    v.resize(b.elements);
    for (auto& e : v) e = dist(rng);
  }
  return in;
}

std::vector<std::string> derivation(const BenchmarkResult& r) {
  std::vector<std::string> lines;
  for (const auto& e : r.staged.stats.log) {
    auto it = r.cell_labels.find(e.cell);
    const std::string label = it == r.cell_labels.end() ? "cell " + std::to_string(e.cell) : it->second;
    lines.push_back("run " + std::to_string(e.run) + ": " + label + " " + e.from + " -> " + e.to);
  }
  lines.push_back("runs = merges + 1 = " + std::to_string(r.staged.stats.merges) + " + 1 = " +
                  std::to_string(r.staged.stats.runs));
  return lines;
}

}  // namespace prophecy::einsum
