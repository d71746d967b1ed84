#pragma once

#include <cmath>
#include <concepts>
#include <string>

namespace prophecy::staging {

// A lattice usable by a prophecy cell. `merge(cur, req)` must either satisfy
// `req` or climb to a strictly higher rank, and ranks are bounded by
// `max_rank`; the rerun driver relies on both.
template <class L>
concept Lattice = requires(const typename L::value_type& a, const typename L::value_type& b) {
  { L::satisfies(a, b) } -> std::convertible_to<bool>;
  { L::merge(a, b) } -> std::same_as<typename L::value_type>;
  { L::rank(a) } -> std::convertible_to<int>;
  { L::to_string(a) } -> std::convertible_to<std::string>;
  { L::max_rank } -> std::convertible_to<int>;
  { L::name } -> std::convertible_to<const char*>;
  { a == b } -> std::convertible_to<bool>;
};

// F < T; T means "needed".
struct TrueTop {
  enum class value_type { F = 0, T = 1 };
  static constexpr value_type F = value_type::F;
  static constexpr value_type T = value_type::T;
  static constexpr int max_rank = 1;
  static constexpr const char* name = "TrueTop";

  static bool satisfies(value_type cur, value_type req) { return req == F || cur == T; }
  static value_type merge(value_type cur, value_type req) { return satisfies(cur, req) ? cur : T; }
  static int rank(value_type v) { return v == T ? 1 : 0; }
  static std::string to_string(value_type v) { return v == T ? "T" : "F"; }
};

// Unspecified < T(threshold) < F. Two T requirements with different
// thresholds collapse to F.
struct FalseTop {
  static constexpr float tolerance = 0.001f;

  enum class Level { Unspecified = 0, T = 1, F = 2 };
  struct value_type {
    Level level = Level::Unspecified;
    float threshold = 0.0f;
    friend bool operator==(const value_type&, const value_type&) = default;
  };
  static constexpr int max_rank = 2;
  static constexpr const char* name = "FalseTop";

  static value_type unspecified() { return {}; }
  static value_type t(float threshold) { return {Level::T, threshold}; }
  static value_type f() { return {Level::F, 0.0f}; }

  static bool satisfies(const value_type& cur, const value_type& req) {
    if (cur.level > req.level) return true;
    if (cur.level < req.level) return false;
    if (cur.level == Level::T) return std::fabs(cur.threshold - req.threshold) < tolerance;
    return true;
  }
  static value_type merge(const value_type& cur, const value_type& req) {
    if (satisfies(cur, req)) return cur;
    if (cur.level == Level::T && req.level == Level::T) return f();
    return req;
  }
  static int rank(const value_type& v) { return static_cast<int>(v.level); }
  static std::string to_string(const value_type& v);
};

static_assert(Lattice<TrueTop>);
static_assert(Lattice<FalseTop>);

}  // namespace prophecy::staging
