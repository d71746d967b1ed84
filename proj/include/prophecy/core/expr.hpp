#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>

namespace prophecy::core {

/// Integer values are 64-bit two's complement; arithmetic wraps on overflow.
using Value = std::int64_t;

using VarSet = std::set<std::string, std::less<>>;

struct AExp {
  enum class Kind { literal, variable, add, sub, mul };

  Kind kind = Kind::literal;
  Value literal = 0;
  std::string variable;
  std::shared_ptr<const AExp> lhs;
  std::shared_ptr<const AExp> rhs;

  static AExp lit(Value n);
  static AExp var(std::string name);
  static AExp binary(Kind kind, AExp lhs, AExp rhs);
};

bool operator==(const AExp& a, const AExp& b);

AExp operator+(AExp a, AExp b);
AExp operator-(AExp a, AExp b);
AExp operator*(AExp a, AExp b);

struct BExp {
  enum class Kind { truth, eq, le, negate, conj, disj };

  Kind kind = Kind::truth;
  bool truth = false;
  std::shared_ptr<const AExp> a0;
  std::shared_ptr<const AExp> a1;
  std::shared_ptr<const BExp> b0;
  std::shared_ptr<const BExp> b1;

  static BExp constant(bool t);
  static BExp eq(AExp lhs, AExp rhs);
  static BExp le(AExp lhs, AExp rhs);
  static BExp negate(BExp b);
  static BExp conj(BExp lhs, BExp rhs);
  static BExp disj(BExp lhs, BExp rhs);
};

bool operator==(const BExp& a, const BExp& b);

VarSet vars(const AExp& e);
VarSet vars(const BExp& b);

/// Finite map from variable names to values. Reading an unmapped variable is
/// reported by the evaluator, never defaulted.
class State {
 public:
  State() = default;
  State(std::initializer_list<std::pair<const std::string, Value>> init) : values_(init) {}

  std::optional<Value> find(std::string_view name) const;
  bool contains(std::string_view name) const { return values_.find(name) != values_.end(); }
  void set(std::string name, Value v) { values_[std::move(name)] = v; }
  std::size_t size() const { return values_.size(); }
  const std::map<std::string, Value, std::less<>>& values() const { return values_; }

  friend bool operator==(const State&, const State&) = default;

 private:
  std::map<std::string, Value, std::less<>> values_;
};

std::string to_string(const State& s);

struct UndefinedVariable {
  std::string name;
  friend bool operator==(const UndefinedVariable&, const UndefinedVariable&) = default;
};

template <typename T>
struct Evaluated {
  T value;
  VarSet reads;
};

template <typename T>
using EvalResult = std::variant<Evaluated<T>, UndefinedVariable>;

// Every subterm is evaluated (no short-circuit), so on success the read set
// always equals vars(e). On failure the leftmost undefined variable is named.
EvalResult<Value> eval(const AExp& e, const State& s);
EvalResult<bool> eval(const BExp& b, const State& s);

std::string to_string(const AExp& e);
std::string to_string(const BExp& b);

}  // namespace prophecy::core
