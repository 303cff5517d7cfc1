#pragma once

#include <Eigen/Core>
#include <cmath>

namespace rgd {

// Forward-mode scalar: a value together with one directional derivative.
// Arithmetic follows the product/chain rules exactly, so any computation
// written generically over its scalar type yields exact directional
// derivatives when evaluated on Dual inputs.
struct Dual {
  double value = 0.0;
  double tangent = 0.0;

  constexpr Dual() = default;
  constexpr Dual(double v) : value(v) {}  // NOLINT: implicit by design
  constexpr Dual(double v, double t) : value(v), tangent(t) {}
};

constexpr Dual operator+(Dual a, Dual b) { return {a.value + b.value, a.tangent + b.tangent}; }
constexpr Dual operator-(Dual a, Dual b) { return {a.value - b.value, a.tangent - b.tangent}; }
constexpr Dual operator-(Dual a) { return {-a.value, -a.tangent}; }
constexpr Dual operator+(Dual a) { return a; }

constexpr Dual operator*(Dual a, Dual b) {
  return {a.value * b.value, a.tangent * b.value + a.value * b.tangent};
}

constexpr Dual operator/(Dual a, Dual b) {
  const double inv = 1.0 / b.value;
  return {a.value * inv, (a.tangent - a.value * b.tangent * inv) * inv};
}

inline Dual& operator+=(Dual& a, Dual b) { return a = a + b; }
inline Dual& operator-=(Dual& a, Dual b) { return a = a - b; }
inline Dual& operator*=(Dual& a, Dual b) { return a = a * b; }
inline Dual& operator/=(Dual& a, Dual b) { return a = a / b; }

constexpr bool operator==(Dual a, Dual b) { return a.value == b.value; }
constexpr bool operator!=(Dual a, Dual b) { return a.value != b.value; }
constexpr bool operator<(Dual a, Dual b) { return a.value < b.value; }
constexpr bool operator<=(Dual a, Dual b) { return a.value <= b.value; }
constexpr bool operator>(Dual a, Dual b) { return a.value > b.value; }
constexpr bool operator>=(Dual a, Dual b) { return a.value >= b.value; }

inline Dual exp(Dual a) {
  const double e = std::exp(a.value);
  return {e, e * a.tangent};
}

inline Dual log(Dual a) { return {std::log(a.value), a.tangent / a.value}; }

inline Dual sqrt(Dual a) {
  const double s = std::sqrt(a.value);
  return {s, 0.5 * a.tangent / s};
}

inline Dual tanh(Dual a) {
  const double th = std::tanh(a.value);
  return {th, (1.0 - th * th) * a.tangent};
}

inline Dual abs(Dual a) { return a.value < 0.0 ? -a : a; }

inline bool isfinite(Dual a) { return std::isfinite(a.value) && std::isfinite(a.tangent); }
inline bool isfinite(double a) { return std::isfinite(a); }

inline double value_of(double x) { return x; }
inline double value_of(Dual x) { return x.value; }

}  // namespace rgd

namespace Eigen {

template <>
struct NumTraits<rgd::Dual> : NumTraits<double> {
  using Real = rgd::Dual;
  using NonInteger = rgd::Dual;
  using Nested = rgd::Dual;
  using Literal = rgd::Dual;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 2,
    AddCost = 2,
    MulCost = 4
  };
  static inline rgd::Dual epsilon() { return NumTraits<double>::epsilon(); }
  static inline rgd::Dual dummy_precision() { return NumTraits<double>::dummy_precision(); }
  static inline rgd::Dual highest() { return NumTraits<double>::highest(); }
  static inline rgd::Dual lowest() { return NumTraits<double>::lowest(); }
};

}  // namespace Eigen
