#pragma once

#include <array>
#include <cmath>
#include <concepts>
#include <functional>
#include <string>
#include <type_traits>
#include <utility>

#include "magsi/dual.hpp"
#include "magsi/errors.hpp"
#include "magsi/expr.hpp"
#include "magsi/geometry.hpp"

namespace magsi {

/// A real function of N reals that can be evaluated at double, D1 and D2.
///
/// Constructed from any generic callable `f(const std::array<T, N>&) -> T`;
/// the callable is instantiated once per supported scalar type. Functions that
/// are themselves built from derivatives (brackets) only support double and
/// D1 and are created with `first_order`.
template <std::size_t N>
class DifferentiableScalar {
 public:
  template <class T>
  using Point = std::array<T, N>;

  DifferentiableScalar() = default;

  template <class F>
    requires(!std::same_as<std::remove_cvref_t<F>, DifferentiableScalar> &&
             std::invocable<const F&, const Point<D2>&>)
  DifferentiableScalar(F f)  // NOLINT(implicit)
      : e0_(f), e1_(f), e2_(std::move(f)) {}

  template <class F>
  static DifferentiableScalar first_order(F f) {
    DifferentiableScalar s;
    s.e0_ = f;
    s.e1_ = std::move(f);
    s.e2_ = [](const Point<D2>&) -> D2 {
      throw Error("second derivatives are not available for this derived function");
    };
    return s;
  }

  template <class T>
  T operator()(const Point<T>& x) const {
    if constexpr (std::is_same_v<T, double>)
      return e0_(x);
    else if constexpr (std::is_same_v<T, D1>)
      return e1_(x);
    else {
      static_assert(std::is_same_v<T, D2>, "unsupported scalar type");
      return e2_(x);
    }
  }

  explicit operator bool() const { return static_cast<bool>(e0_); }

 private:
  std::function<double(const Point<double>&)> e0_;
  std::function<D1(const Point<D1>&)> e1_;
  std::function<D2(const Point<D2>&)> e2_;
};

using ConfigScalar = DifferentiableScalar<3>;
using PhaseScalar = DifferentiableScalar<6>;

template <std::size_t N>
DifferentiableScalar<N> operator+(const DifferentiableScalar<N>& f, const DifferentiableScalar<N>& g) {
  return DifferentiableScalar<N>([f, g](const auto& x) { return f(x) + g(x); });
}
template <std::size_t N>
DifferentiableScalar<N> operator-(const DifferentiableScalar<N>& f, const DifferentiableScalar<N>& g) {
  return DifferentiableScalar<N>([f, g](const auto& x) { return f(x) - g(x); });
}
template <std::size_t N>
DifferentiableScalar<N> operator*(const DifferentiableScalar<N>& f, const DifferentiableScalar<N>& g) {
  return DifferentiableScalar<N>([f, g](const auto& x) { return f(x) * g(x); });
}
template <std::size_t N>
DifferentiableScalar<N> operator*(double c, const DifferentiableScalar<N>& f) {
  return DifferentiableScalar<N>([f, c](const auto& x) { return c * f(x); });
}

/// Exact gradient with one forward-mode pass per coordinate. T is the scalar
/// of the point; the passes run at Dual<T>.
template <class T, std::size_t N, class F>
std::array<T, N> gradient_at(const F& f, const std::array<T, N>& x) {
  std::array<T, N> g;
  for (std::size_t k = 0; k < N; ++k) g[k] = f(seed(x, k)).d;
  return g;
}

template <std::size_t N>
std::array<double, N> gradient(const DifferentiableScalar<N>& f, const std::array<double, N>& x) {
  auto g = gradient_at(f, x);
  for (double v : g)
    if (!std::isfinite(v)) throw NonFinite("gradient evaluated to a non-finite value");
  return g;
}

inline Vec3 grad_config(const ConfigScalar& f, const Vec3& q) { return gradient(f, q); }

/// Vector potential one-form in a chart (covariant components).
struct VectorPotential {
  Chart chart;
  std::array<ConfigScalar, 3> comp;

  template <class T>
  std::array<T, 3> operator()(const std::array<T, 3>& q) const {
    return {comp[0](q), comp[1](q), comp[2](q)};
  }
};

/// Magnetic field as the two-form B_1 dq2^dq3 + B_2 dq3^dq1 + B_3 dq1^dq2;
/// in the Cartesian chart these are the usual vector components.
struct MagneticField {
  Chart chart;
  std::array<ConfigScalar, 3> comp;

  template <class T>
  std::array<T, 3> operator()(const std::array<T, 3>& q) const {
    return {comp[0](q), comp[1](q), comp[2](q)};
  }
};

/// Exterior derivative of a one-form at q (curl in Cartesian).
template <class T>
std::array<T, 3> exterior_derivative(const VectorPotential& a, const std::array<T, 3>& q) {
  // jac[k][i] = d_k A_i
  std::array<std::array<T, 3>, 3> jac;
  for (std::size_t k = 0; k < 3; ++k) {
    auto qs = seed(q, k);
    auto v = a(qs);
    for (std::size_t i = 0; i < 3; ++i) jac[k][i] = v[i].d;
  }
  return {jac[1][2] - jac[2][1], jac[2][0] - jac[0][2], jac[0][1] - jac[1][0]};
}

/// Residual dA - B at q. Both must live in the same chart.
inline Vec3 curl_check(const VectorPotential& a, const MagneticField& b, const Vec3& q, double margin = kAxisMargin) {
  if (!(a.chart == b.chart)) throw Error("curl_check: potential and field are in different charts");
  if (a.chart.kind != ChartKind::Cartesian)
    require_interior(a.chart, q, margin);
  else if (axis_distance(q) <= margin)
    throw AxisSingularity("curl_check on the z-axis " + detail::fmt3(q));
  Vec3 da = exterior_derivative(a, q);
  Vec3 bv = b(q);
  Vec3 r{da[0] - bv[0], da[1] - bv[1], da[2] - bv[2]};
  for (double v : r)
    if (!std::isfinite(v)) throw NonFinite("curl residual is not finite at " + detail::fmt3(q));
  return r;
}

/// d(B) for the two-form: sum_i d_i B_i. This is div B in Cartesian.
inline double closedness_residual(const MagneticField& b, const Vec3& q) {
  double s = 0.0;
  for (std::size_t k = 0; k < 3; ++k) s += b.comp[k](seed(q, k)).d;
  return s;
}

/// How profile arguments are formed.
enum class ProfileArgument {
  Squared,  // circular parabolic: f(eta^2), g(xi^2), alpha(eta^2), beta(xi^2)
  Direct,   // spheroidal: f(eta), g(xi), alpha(eta), beta(xi)
};

/// The four free functions of an integrable family.
struct ProfileSet {
  Expr f;
  Expr g;
  Expr alpha;
  Expr beta;
  ProfileArgument argument = ProfileArgument::Squared;

  nlohmann::json to_json() const {
    return {{"f", f.to_json()}, {"g", g.to_json()}, {"alpha", alpha.to_json()}, {"beta", beta.to_json()}};
  }
  static ProfileSet from_json(const nlohmann::json& j, ProfileArgument arg) {
    auto get = [&](const char* key) {
      if (!j.contains(key)) return Expr::constant(0.0);
      return Expr::from_json(j.at(key));
    };
    return {get("f"), get("g"), get("alpha"), get("beta"), arg};
  }
};

/// Gauge-type reparametrization of circular parabolic profiles:
/// (f + l s, g - l s, alpha + l s f + l^2 s^2 / 2, beta + l s g - l^2 s^2 / 2).
/// It leaves B and W unchanged and shifts X1 by l * X2tilde. Without the l^2
/// terms W would move by the constant l^2 / 2.
inline ProfileSet lambda_shift(const ProfileSet& p, double lambda) {
  if (p.argument != ProfileArgument::Squared)
    throw Error("lambda_shift applies to circular parabolic (squared-argument) profiles");
  if (lambda == 0.0) return p;
  Expr ls = Expr::constant(lambda) * Expr::var();
  Expr half_sq = 0.5 * ls * ls;
  return {p.f + ls, p.g - ls, p.alpha + ls * p.f + half_sq, p.beta + ls * p.g - half_sq, p.argument};
}

}  // namespace magsi
