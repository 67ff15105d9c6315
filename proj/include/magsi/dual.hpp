#pragma once

// Forward-mode dual numbers. A Dual<T> carries a value and one directional
// derivative; nesting (Dual<Dual<double>>) gives mixed second derivatives.

#include <array>
#include <cmath>
#include <cstddef>
#include <type_traits>

namespace magsi {

using std::acos;
using std::asinh;
using std::atan2;
using std::cos;
using std::cosh;
using std::exp;
using std::log;
using std::pow;
using std::sin;
using std::sinh;
using std::sqrt;

template <class T>
struct Dual {
  T v{};
  T d{};

  constexpr Dual() = default;
  constexpr Dual(double value) : v(value), d(0.0) {}  // NOLINT(implicit)
  constexpr Dual(T value, T deriv) : v(value), d(deriv) {}

  Dual& operator+=(const Dual& o) { v += o.v; d += o.d; return *this; }
  Dual& operator-=(const Dual& o) { v -= o.v; d -= o.d; return *this; }
  Dual& operator*=(const Dual& o) { d = d * o.v + v * o.d; v *= o.v; return *this; }
  Dual& operator/=(const Dual& o) { *this = *this / o; return *this; }
};

template <class T>
struct is_dual : std::false_type {};
template <class T>
struct is_dual<Dual<T>> : std::true_type {};
template <class T>
inline constexpr bool is_dual_v = is_dual<T>::value;

/// Nesting depth: 0 for double, 1 for Dual<double>, ...
template <class T>
struct dual_depth : std::integral_constant<int, 0> {};
template <class T>
struct dual_depth<Dual<T>> : std::integral_constant<int, 1 + dual_depth<T>::value> {};
template <class T>
inline constexpr int dual_depth_v = dual_depth<T>::value;

using D1 = Dual<double>;
using D2 = Dual<D1>;

template <class S>
concept Arithmetic = std::is_arithmetic_v<S>;

inline double value_of(double x) { return x; }
template <class T>
double value_of(const Dual<T>& x) { return value_of(x.v); }

template <class T>
Dual<T> operator+(const Dual<T>& a) { return a; }
template <class T>
Dual<T> operator-(const Dual<T>& a) { return {-a.v, -a.d}; }

template <class T>
Dual<T> operator+(const Dual<T>& a, const Dual<T>& b) { return {a.v + b.v, a.d + b.d}; }
template <class T>
Dual<T> operator-(const Dual<T>& a, const Dual<T>& b) { return {a.v - b.v, a.d - b.d}; }
template <class T>
Dual<T> operator*(const Dual<T>& a, const Dual<T>& b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
template <class T>
Dual<T> operator/(const Dual<T>& a, const Dual<T>& b) {
  T inv = 1.0 / b.v;
  T q = a.v * inv;
  return {q, (a.d - q * b.d) * inv};
}

template <class T, Arithmetic S>
Dual<T> operator+(const Dual<T>& a, S b) { return {a.v + static_cast<double>(b), a.d}; }
template <class T, Arithmetic S>
Dual<T> operator+(S b, const Dual<T>& a) { return {static_cast<double>(b) + a.v, a.d}; }
template <class T, Arithmetic S>
Dual<T> operator-(const Dual<T>& a, S b) { return {a.v - static_cast<double>(b), a.d}; }
template <class T, Arithmetic S>
Dual<T> operator-(S b, const Dual<T>& a) { return {static_cast<double>(b) - a.v, -a.d}; }
template <class T, Arithmetic S>
Dual<T> operator*(const Dual<T>& a, S b) {
  double s = static_cast<double>(b);
  return {a.v * s, a.d * s};
}
template <class T, Arithmetic S>
Dual<T> operator*(S b, const Dual<T>& a) { return a * b; }
template <class T, Arithmetic S>
Dual<T> operator/(const Dual<T>& a, S b) {
  double s = 1.0 / static_cast<double>(b);
  return {a.v * s, a.d * s};
}
template <class T, Arithmetic S>
Dual<T> operator/(S b, const Dual<T>& a) {
  T inv = 1.0 / a.v;
  T q = static_cast<double>(b) * inv;
  return {q, -q * a.d * inv};
}

template <class T>
Dual<T> sin(const Dual<T>& a) { return {sin(a.v), cos(a.v) * a.d}; }
template <class T>
Dual<T> cos(const Dual<T>& a) { return {cos(a.v), -sin(a.v) * a.d}; }
template <class T>
Dual<T> sinh(const Dual<T>& a) { return {sinh(a.v), cosh(a.v) * a.d}; }
template <class T>
Dual<T> cosh(const Dual<T>& a) { return {cosh(a.v), sinh(a.v) * a.d}; }
template <class T>
Dual<T> exp(const Dual<T>& a) {
  T e = exp(a.v);
  return {e, e * a.d};
}
template <class T>
Dual<T> log(const Dual<T>& a) { return {log(a.v), a.d / a.v}; }
template <class T>
Dual<T> sqrt(const Dual<T>& a) {
  T r = sqrt(a.v);
  return {r, a.d / (2.0 * r)};
}
template <class T>
Dual<T> asinh(const Dual<T>& a) { return {asinh(a.v), a.d / sqrt(a.v * a.v + 1.0)}; }
template <class T>
Dual<T> atan2(const Dual<T>& y, const Dual<T>& x) {
  T r2 = x.v * x.v + y.v * y.v;
  return {atan2(y.v, x.v), (x.v * y.d - y.v * x.d) / r2};
}
template <class T>
Dual<T> pow(const Dual<T>& a, double p) {
  T head = pow(a.v, p - 1.0);
  return {head * a.v, p * head * a.d};
}

/// Integer power by repeated squaring; exact derivative for any sign of the base.
template <class T>
T ipow(const T& x, int n) {
  if (n < 0) return 1.0 / ipow(x, -n);
  T result = 1.0;
  T base = x;
  while (n > 0) {
    if (n & 1) result = result * base;
    base = base * base;
    n >>= 1;
  }
  return result;
}

template <class T>
T sqr(const T& x) { return x * x; }

/// Lift a point to Dual<T> with a unit seed in coordinate `k`.
template <class T, std::size_t N>
std::array<Dual<T>, N> seed(const std::array<T, N>& x, std::size_t k) {
  std::array<Dual<T>, N> out;
  for (std::size_t i = 0; i < N; ++i) out[i] = Dual<T>(x[i], i == k ? T(1.0) : T(0.0));
  return out;
}

template <class T, std::size_t N>
std::array<T, N> lift(const std::array<double, N>& x) {
  std::array<T, N> out;
  for (std::size_t i = 0; i < N; ++i) out[i] = T(x[i]);
  return out;
}

}  // namespace magsi
