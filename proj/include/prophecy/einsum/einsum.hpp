#pragma once

#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "prophecy/staging/context.hpp"
#include "prophecy/staging/interpret.hpp"

namespace prophecy::einsum {

using staging::Dyn;
using staging::StageContext;
using staging::TrueTop;

enum class Strategy { prophecy, copy_all, unified };

std::string to_string(Strategy s);
std::optional<Strategy> parse_strategy(const std::string& s);

struct Grid {
  int max_bid = 40;
  int max_tid = 512;
};

class Session;
class Tensor;
class Access;

class Index {
 public:
  explicit Index(std::string name = "?") : name_(std::move(name)) {}
  Index(const Index&) = delete;
  Index& operator=(const Index&) = delete;
  const std::string& name() const { return name_; }
  int range() const { return range_; }

 private:
  friend class Session;
  friend class Term;
  std::string name_;
  int range_ = -1;  // bound per statement from the tensors it indexes
  std::optional<Dyn> it_;
};

// Right-hand side of an einsum statement.
class Term {
 public:
  enum class Kind { value, access, index, sum, product };

  Term(double v);         // NOLINT
  Term(const Access& a);  // NOLINT
  Term(Index& i);         // NOLINT

  Kind kind() const { return node_->kind; }

  static Term combine(Kind k, const Term& a, const Term& b) { return Term(k, a, b); }

 private:
  friend class Session;
  struct Node {
    Kind kind = Kind::value;
    float value = 0.0f;
    Tensor* tensor = nullptr;
    std::vector<Index*> indices;  // access indices, or the single index
    std::shared_ptr<const Node> lhs, rhs;
  };
  Term(Kind k, const Term& a, const Term& b);
  std::shared_ptr<const Node> node_;
};

inline Term operator+(const Term& a, const Term& b) { return Term::combine(Term::Kind::sum, a, b); }
inline Term operator*(const Term& a, const Term& b) { return Term::combine(Term::Kind::product, a, b); }

class Access {
 public:
  Access(const Access&) = default;
  Access operator[](Index& i) const;

  // Einsum statements. Indices on the right but not the left are reduced.
  void operator=(const Term& rhs) const;
  void operator=(const Access& rhs) const;  // NOLINT: DSL assignment, not a copy
  void operator+=(const Term& rhs) const;
  void operator*=(const Term& rhs) const;

  Tensor& tensor() const { return *tensor_; }
  const std::vector<Index*>& indices() const { return indices_; }

 private:
  friend class Tensor;
  Access(Tensor* t, std::vector<Index*> idx) : tensor_(t), indices_(std::move(idx)) {}
  Tensor* tensor_;
  std::vector<Index*> indices_;
};

class TensorKey {
  friend class Session;
  TensorKey() = default;
};

class Tensor {
 public:
  Tensor(TensorKey, Session* s, std::string name, std::vector<int> sizes, Dyn host)
      : session_(s), name_(std::move(name)), sizes_(std::move(sizes)), host_(std::move(host)) {}
  Tensor(const Tensor&) = delete;
  Tensor& operator=(const Tensor&) = delete;

  const std::string& name() const { return name_; }
  const std::vector<int>& sizes() const { return sizes_; }
  int total_size() const;
  const Dyn& host() const { return host_; }
  const std::optional<Dyn>& device() const { return device_; }
  bool gpu_written() const { return gpu_written_.get(); }

  Access operator[](Index& i) { return Access(this, {&i}); }

 private:
  friend class Session;
  friend class Access;

  Session* session_;
  std::string name_;
  std::vector<int> sizes_;
  Dyn host_;
  std::optional<Dyn> device_;
  staging::Prophecy<TrueTop> needs_gpu_;
  std::optional<staging::Prophecy<TrueTop>> gpu_read_;
  staging::HistoryVar<bool> gpu_written_{false};
};

enum class Mode { assign, add_assign, mul_assign };

// Read and write sets of one kernel, taken from the einsum expressions
// themselves rather than from the prophecy cells.
struct KernelAccess {
  std::set<std::string> reads;
  std::set<std::string> writes;
};

// One DSL session per first-stage run.
class Session {
 public:
  Session(StageContext& ctx, Strategy strategy, Grid grid = {});
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  // Host allocation owned by the session.
  Tensor& tensor(const std::string& name, std::vector<int> sizes);
  // Wraps a caller-supplied host buffer.
  Tensor& tensor(const std::string& name, std::vector<int> sizes, const Dyn& buffer);

  void run_on_gpu(const std::function<void()>& kernel);
  bool on_gpu() const { return on_gpu_; }

  void einsum(const Access& lhs, const Term& rhs, Mode mode);

  StageContext& context() { return ctx_; }
  Strategy strategy() const { return strategy_; }
  const Grid& grid() const { return grid_; }
  const std::deque<Tensor>& tensors() const { return tensors_; }
  const std::vector<KernelAccess>& kernels() const { return kernels_; }
  // Prophecy cell id -> "tensor.cell" label, for reports.
  const std::map<std::size_t, std::string>& cell_labels() const { return cell_labels_; }

 private:
  Tensor& add(const std::string& name, std::vector<int> sizes, const Dyn& host);
  Dyn bytes(const Tensor& t) const;
  Dyn flat_index(const Tensor& t, const std::vector<Index*>& idx) const;
  Dyn value(const Term::Node& n);
  Dyn read(Tensor& t, const std::vector<Index*>& idx);
  void lower_lhs(const Access& lhs, const std::vector<Index*>& lhs_idx, std::size_t ind, Mode mode,
                 const std::vector<Index*>& red, const Term& rhs);
  void lower_rhs(const std::vector<Index*>& red, std::size_t ind, Mode mode, const Term& rhs, const Dyn& acc);
  void store(const Access& lhs, const Dyn& v);

  StageContext& ctx_;
  Strategy strategy_;
  Grid grid_;
  std::deque<Tensor> tensors_;
  bool on_gpu_ = false;
  std::optional<Dyn> bid_, tid_;
  std::vector<KernelAccess> kernels_;
  std::map<std::size_t, std::string> cell_labels_;
};

// ---- benchmarks ----

struct BenchmarkOptions {
  Strategy strategy = Strategy::prophecy;
  int iterations = 10;
  Grid grid;
  std::size_t max_runs = 1000;
};

struct BufferParam {
  std::string name;      // argN
  std::string tensor;    // tensor wrapping it
  std::size_t elements;  // float count
};

struct Movement {
  std::set<std::string> device_allocated;
  std::set<std::string> unified_allocated;
  std::set<std::string> copied_in;
  std::set<std::string> copied_out;
  std::size_t copy_in_calls = 0;
  std::size_t copy_out_calls = 0;
};

struct BenchmarkResult {
  staging::StageResult staged;
  Strategy strategy = Strategy::prophecy;
  std::vector<std::string> tensors;                 // in creation order
  std::map<std::string, std::string> var_tensor;    // host/device variable -> tensor
  std::vector<BufferParam> buffers;
  std::vector<KernelAccess> kernels;
  std::map<std::size_t, std::string> cell_labels;
  Movement movement;
};

// z[i][j] += x[i][k] * y[k][j] inside an iteration loop, with the host
// staging tensors x_b, y_b, z_b bound to the three pointer parameters.
BenchmarkResult build_matmul_benchmark(int M, int N, int O, const BenchmarkOptions& opts = {});
// z[i] += x[i][k] * y[k] with the same six-tensor layout.
BenchmarkResult build_matvec_benchmark(int M, int N, const BenchmarkOptions& opts = {});

// Static scan of an emitted program for allocations and copies.
Movement scan_movement(const staging::SecondStageProgram& prog, const std::map<std::string, std::string>& var_tensor);

// Uniform values in [-1, 1] for every buffer parameter.
staging::InterpInputs random_inputs(const BenchmarkResult& r, std::uint64_t seed);

// Derivation of the run count: one line per merge, then the total.
std::vector<std::string> derivation(const BenchmarkResult& r);

}  // namespace prophecy::einsum
