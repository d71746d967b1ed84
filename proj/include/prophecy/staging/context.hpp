#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

#include "prophecy/staging/ir.hpp"
#include "prophecy/staging/lattice.hpp"

namespace prophecy::staging {

class StageContext;

// Thrown by Prophecy::require after a merge. Deliberately not a
// std::exception so generator code catching those does not swallow it.
struct MispredictionSignal {
  std::size_t cell = 0;
};

// A second-stage value under construction: an expression tree plus the run
// that produced it.
class Dyn {
 public:
  template <class T>
    requires std::is_arithmetic_v<T>
  Dyn(T v) {  // NOLINT: implicit on purpose, first-stage constants become literals
    if constexpr (std::is_same_v<T, bool>) {
      expr_ = bool_lit(v);
    } else if constexpr (std::is_floating_point_v<T>) {
      expr_ = float_lit(static_cast<float>(v));
    } else {
      expr_ = int_lit(static_cast<std::int64_t>(v));
    }
  }

  const Expr& expr() const { return expr_; }
  Type type() const { return expr_->type; }
  std::uint64_t run() const { return run_; }
  bool is_lvalue() const { return lvalue_; }

  Dyn operator[](const Dyn& i) const;

  friend Dyn operator+(const Dyn& a, const Dyn& b) { return combine(Op::add, a, b); }
  friend Dyn operator-(const Dyn& a, const Dyn& b) { return combine(Op::sub, a, b); }
  friend Dyn operator*(const Dyn& a, const Dyn& b) { return combine(Op::mul, a, b); }
  friend Dyn operator/(const Dyn& a, const Dyn& b) { return combine(Op::div, a, b); }
  friend Dyn operator%(const Dyn& a, const Dyn& b) { return combine(Op::mod, a, b); }
  friend Dyn operator<(const Dyn& a, const Dyn& b) { return combine(Op::lt, a, b); }
  friend Dyn operator<=(const Dyn& a, const Dyn& b) { return combine(Op::le, a, b); }
  friend Dyn operator>(const Dyn& a, const Dyn& b) { return combine(Op::gt, a, b); }
  friend Dyn operator>=(const Dyn& a, const Dyn& b) { return combine(Op::ge, a, b); }
  friend Dyn operator-(const Dyn& a) { return Dyn(unary(Op::neg, a.expr_), a.run_); }
  friend Dyn operator!(const Dyn& a) { return Dyn(unary(Op::lnot, a.expr_), a.run_); }
  friend Dyn eq(const Dyn& a, const Dyn& b) { return combine(Op::eq, a, b); }
  friend Dyn ne(const Dyn& a, const Dyn& b) { return combine(Op::ne, a, b); }
  friend Dyn land(const Dyn& a, const Dyn& b) { return combine(Op::land, a, b); }
  friend Dyn lor(const Dyn& a, const Dyn& b) { return combine(Op::lor, a, b); }

 private:
  friend class StageContext;
  Dyn(Expr e, std::uint64_t run, bool lvalue = false) : expr_(std::move(e)), run_(run), lvalue_(lvalue) {}
  static std::uint64_t oldest(std::uint64_t a, std::uint64_t b) {
    if (a == 0) return b;
    if (b == 0) return a;
    return a < b ? a : b;
  }
  static Dyn combine(Op op, const Dyn& a, const Dyn& b) {
    return Dyn(binary(op, a.expr_, b.expr_), oldest(a.run_, b.run_));
  }

  Expr expr_;
  std::uint64_t run_ = 0;
  bool lvalue_ = false;
};

// First-stage state describing the past of the current run. Lives inside
// generator code, so every rerun constructs it afresh at its initializer.
template <class T>
class HistoryVar {
 public:
  explicit HistoryVar(T init = T{}) : init_(init), value_(init) {}
  const T& get() const { return value_; }
  void set(T v) { value_ = std::move(v); }
  void reset() { value_ = init_; }
  HistoryVar& operator=(T v) {
    value_ = std::move(v);
    return *this;
  }
  explicit operator bool() const
    requires std::is_same_v<T, bool>
  {
    return value_;
  }

 private:
  T init_;
  T value_;
};

struct MergeEvent {
  std::uint64_t run = 0;
  std::size_t cell = 0;
  std::string lattice;
  std::string from;
  std::string to;
};

struct RequireEvent {
  std::uint64_t run = 0;
  std::size_t cell = 0;
  bool satisfied = false;
};

struct StageStats {
  std::size_t runs = 0;
  std::size_t merges = 0;
  std::size_t rerun_bound = 1;  // 1 + sum over cells of (max rank - initial rank)
  std::vector<MergeEvent> log;
};

struct CellInfo {
  std::size_t id = 0;
  std::string lattice;
  std::string value;
  int rank = 0;
  int initial_rank = 0;
};

template <Lattice L>
class Prophecy {
 public:
  using value_type = typename L::value_type;
  Prophecy() = default;
  value_type get() const;
  // No-op when the current value satisfies `required`; otherwise merges and
  // aborts the run with MispredictionSignal.
  void require(const value_type& required);
  std::size_t id() const { return id_; }
  explicit operator bool() const { return ctx_ != nullptr; }

 private:
  friend class StageContext;
  Prophecy(StageContext* ctx, std::size_t id, std::uint64_t run) : ctx_(ctx), id_(id), run_(run) {}
  StageContext* ctx_ = nullptr;
  std::size_t id_ = 0;
  std::uint64_t run_ = 0;
};

class StageContext {
 public:
  explicit StageContext(std::string function_name = "generated", std::string runtime_header = "prophecy_runtime.h");
  StageContext(const StageContext&) = delete;
  StageContext& operator=(const StageContext&) = delete;

  // Starts a first-stage run: recording, names, parameters and the cell
  // cursor restart; the prophecy store is kept.
  void begin_run();
  // Closes the run and returns what it recorded.
  SecondStageProgram finish_run();
  std::uint64_t run_id() const { return run_; }

  Dyn param(Type t);

  // The next cell in creation order: created with `init` on first sight,
  // found again (with its merged value) on every later run.
  template <Lattice L>
  Prophecy<L> prophecy(typename L::value_type init);
  template <Lattice L>
  typename L::value_type cell_value(std::size_t id) const;
  template <Lattice L>
  void require(std::size_t id, const typename L::value_type& required);

  Dyn declare(Type t);
  Dyn declare(Type t, const Dyn& init);
  void assign(const Dyn& lhs, const Dyn& rhs);
  void call(std::string_view callee, std::vector<Dyn> args);
  Dyn call_value(std::string_view callee, std::vector<Dyn> args);
  void ret(const std::optional<Dyn>& value = std::nullopt);

  // Bodies run exactly once while recording; both arms of if_else always run.
  void for_loop(const Dyn& init, const Dyn& bound, const Dyn& step, const std::function<void(const Dyn&)>& body);
  void if_else(const Dyn& cond, const std::function<void()>& then_body,
               const std::function<void()>& else_body = nullptr);
  void kernel(std::int64_t blocks, std::int64_t threads, const std::function<void(const Dyn&, const Dyn&)>& body);
  bool in_kernel() const { return kernel_depth_ > 0; }

  const StageStats& stats() const { return stats_; }
  StageStats& stats() { return stats_; }
  const std::vector<RequireEvent>& require_log() const { return requires_; }
  std::vector<CellInfo> cells() const;

 private:
  struct CellBase {
    virtual ~CellBase() = default;
    virtual const char* lattice() const = 0;
    virtual std::string describe() const = 0;
    virtual int rank() const = 0;
    virtual int max_rank() const = 0;
    int initial_rank = 0;
  };
  template <Lattice L>
  struct Cell final : CellBase {
    typename L::value_type value;
    explicit Cell(typename L::value_type v) : value(v) { initial_rank = L::rank(v); }
    const char* lattice() const override { return L::name; }
    std::string describe() const override { return L::to_string(value); }
    int rank() const override { return L::rank(value); }
    int max_rank() const override { return L::max_rank; }
  };

  template <Lattice L>
  Cell<L>& cell(std::size_t id) const;
  void check(const Dyn& d) const;
  std::string fresh();
  void append(Stmt s);
  void require_open() const;

  std::string function_name_;
  std::string runtime_header_;
  std::vector<std::unique_ptr<CellBase>> cells_;
  std::size_t cursor_ = 0;
  std::uint64_t run_ = 0;
  bool open_ = false;
  std::size_t next_var_ = 0;
  std::vector<Param> params_;
  Block root_;
  std::vector<Block*> stack_;
  int kernel_depth_ = 0;
  StageStats stats_;
  std::vector<RequireEvent> requires_;
};

struct StageOptions {
  std::size_t max_runs = 1000;
  std::string function_name = "generated";
  std::string runtime_header = "prophecy_runtime.h";
};

struct StageResult {
  SecondStageProgram program;
  StageStats stats;
  std::vector<CellInfo> cells;
};

using Generator = std::function<void(StageContext&)>;

// Reruns `generator` until one run finishes without a misprediction.
// Throws StagingError past `max_runs` runs.
StageResult run_staged(const Generator& generator, const StageOptions& options = {});

// ---- template definitions ----

template <Lattice L>
StageContext::Cell<L>& StageContext::cell(std::size_t id) const {
  if (id >= cells_.size()) throw StagingError("unknown prophecy cell #" + std::to_string(id));
  auto* c = dynamic_cast<Cell<L>*>(cells_[id].get());
  if (!c) {
    throw StagingError("prophecy cell #" + std::to_string(id) + " holds a " + cells_[id]->lattice() +
                       " value, not " + L::name);
  }
  return *c;
}

template <Lattice L>
Prophecy<L> StageContext::prophecy(typename L::value_type init) {
  require_open();
  const std::size_t id = cursor_++;
  if (id == cells_.size()) {
    cells_.push_back(std::make_unique<Cell<L>>(init));
    stats_.rerun_bound += static_cast<std::size_t>(L::max_rank - L::rank(init));
  } else {
    cell<L>(id);  // domain check
  }
  return Prophecy<L>(this, id, run_);
}

template <Lattice L>
typename L::value_type StageContext::cell_value(std::size_t id) const {
  return cell<L>(id).value;
}

template <Lattice L>
void StageContext::require(std::size_t id, const typename L::value_type& required) {
  auto& c = cell<L>(id);
  const bool ok = L::satisfies(c.value, required);
  requires_.push_back(RequireEvent{run_, id, ok});
  if (ok) return;
  auto merged = L::merge(c.value, required);
  if (merged == c.value) throw StagingError(std::string("merge made no progress in ") + L::name);
  stats_.log.push_back(MergeEvent{run_, id, L::name, L::to_string(c.value), L::to_string(merged)});
  ++stats_.merges;
  c.value = merged;
  throw MispredictionSignal{id};
}

template <Lattice L>
typename L::value_type Prophecy<L>::get() const {
  if (!ctx_) throw StagingError("empty prophecy handle");
  if (run_ != ctx_->run_id()) throw StagingError("prophecy handle from an earlier run");
  return ctx_->template cell_value<L>(id_);
}

template <Lattice L>
void Prophecy<L>::require(const value_type& required) {
  if (!ctx_) throw StagingError("empty prophecy handle");
  if (run_ != ctx_->run_id()) throw StagingError("prophecy handle from an earlier run");
  ctx_->template require<L>(id_, required);
}

}  // namespace prophecy::staging
