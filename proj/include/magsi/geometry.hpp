#pragma once

// Coordinate charts for the rotationally invariant orthogonal systems and the
// canonical (point) transformations between them.
//
// Coordinates are ordered (xi, eta, phi). Every curvilinear chart here is
// orthogonal, so the coordinate tangent vectors e_i = dx/dq_i are mutually
// orthogonal with |e_i|^2 = g_ii. That makes one-form and momentum transforms
// one-liners: a_i = e_i . a_cart and a_cart = sum_i a_i e_i / g_ii.

#include <array>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <string_view>

#include "magsi/dual.hpp"
#include "magsi/errors.hpp"

namespace magsi {

using Vec3 = std::array<double, 3>;
using Vec6 = std::array<double, 6>;

/// Default distance from the z-axis below which chart operations refuse input.
inline constexpr double kAxisMargin = 1e-9;

enum class ChartKind { Cartesian, CircularParabolic, OblateSpheroidal, ProlateSpheroidal };

struct Chart {
  ChartKind kind = ChartKind::Cartesian;
  double a = 1.0;  // focal parameter, spheroidal charts only

  static Chart cartesian() { return {ChartKind::Cartesian, 1.0}; }
  static Chart circular_parabolic() { return {ChartKind::CircularParabolic, 1.0}; }
  static Chart oblate(double a) { return checked({ChartKind::OblateSpheroidal, a}); }
  static Chart prolate(double a) { return checked({ChartKind::ProlateSpheroidal, a}); }

  bool spheroidal() const {
    return kind == ChartKind::OblateSpheroidal || kind == ChartKind::ProlateSpheroidal;
  }

  friend bool operator==(const Chart& l, const Chart& r) {
    if (l.kind != r.kind) return false;
    return !l.spheroidal() || l.a == r.a;
  }

 private:
  static Chart checked(Chart c) {
    if (!(c.a > 0.0) || !std::isfinite(c.a)) throw OutOfRange("spheroidal focal parameter a must be > 0");
    return c;
  }
};

inline std::string_view chart_name(ChartKind k) {
  switch (k) {
    case ChartKind::Cartesian: return "cartesian";
    case ChartKind::CircularParabolic: return "circular_parabolic";
    case ChartKind::OblateSpheroidal: return "oblate_spheroidal";
    case ChartKind::ProlateSpheroidal: return "prolate_spheroidal";
  }
  return "?";
}

/// A point of 6D phase space in a chart: z = (q1, q2, q3, p1, p2, p3).
struct PhasePoint {
  Chart chart;
  Vec3 q{};
  Vec3 p{};

  Vec6 z() const { return {q[0], q[1], q[2], p[0], p[1], p[2]}; }
  static PhasePoint from_z(const Chart& c, const Vec6& z) {
    return {c, {z[0], z[1], z[2]}, {z[3], z[4], z[5]}};
  }
};

template <class T>
using Frame = std::array<std::array<T, 3>, 3>;  // frame[i] = e_i in Cartesian components

// --- unchecked templated maps ------------------------------------------------

template <class T>
std::array<T, 3> chart_to_cartesian(const Chart& c, const std::array<T, 3>& q) {
  const T& xi = q[0];
  const T& eta = q[1];
  const T& phi = q[2];
  switch (c.kind) {
    case ChartKind::Cartesian:
      return q;
    case ChartKind::CircularParabolic: {
      T rho = xi * eta;
      return {rho * cos(phi), rho * sin(phi), 0.5 * (xi * xi - eta * eta)};
    }
    case ChartKind::OblateSpheroidal: {
      T rho = c.a * cosh(xi) * sin(eta);
      return {rho * cos(phi), rho * sin(phi), c.a * sinh(xi) * cos(eta)};
    }
    case ChartKind::ProlateSpheroidal: {
      T rho = c.a * sinh(xi) * sin(eta);
      return {rho * cos(phi), rho * sin(phi), c.a * cosh(xi) * cos(eta)};
    }
  }
  return q;
}

namespace detail {

// Positive root u of a^2 u^2 + (a^2 - r^2) u - w = 0 with w >= 0, computed
// without cancellation on either sign of (a^2 - r^2).
template <class T>
T spheroidal_root(double a, const T& r2, const T& w) {
  T b = a * a - r2;
  T disc = sqrt(b * b + 4.0 * a * a * w);
  if (value_of(b) > 0.0) return 2.0 * w / (b + disc);
  return (disc - b) / (2.0 * a * a);
}

}  // namespace detail

template <class T>
std::array<T, 3> chart_from_cartesian(const Chart& c, const std::array<T, 3>& x) {
  T rho2 = x[0] * x[0] + x[1] * x[1];
  T z2 = x[2] * x[2];
  T phi = atan2(x[1], x[0]);
  switch (c.kind) {
    case ChartKind::Cartesian:
      return x;
    case ChartKind::CircularParabolic: {
      T r = sqrt(rho2 + z2);
      // xi^2 = r + z, eta^2 = r - z; use rho^2 = (r+z)(r-z) for the small one.
      T xi2, eta2;
      if (value_of(x[2]) >= 0.0) {
        xi2 = r + x[2];
        eta2 = rho2 / xi2;
      } else {
        eta2 = r - x[2];
        xi2 = rho2 / eta2;
      }
      return {sqrt(xi2), sqrt(eta2), phi};
    }
    case ChartKind::OblateSpheroidal: {
      // u = sinh^2(xi) solves a^2 u^2 + (a^2 - r^2) u - z^2 = 0.
      T u = detail::spheroidal_root(c.a, rho2 + z2, z2);
      T sh = sqrt(u);
      T ch = sqrt(1.0 + u);
      T rho = sqrt(rho2);
      return {asinh(sh), atan2(rho * sh, x[2] * ch), phi};
    }
    case ChartKind::ProlateSpheroidal: {
      // u = sinh^2(xi) solves a^2 u^2 + (a^2 - r^2) u - rho^2 = 0.
      T u = detail::spheroidal_root(c.a, rho2 + z2, rho2);
      T sh = sqrt(u);
      T ch = sqrt(1.0 + u);
      T rho = sqrt(rho2);
      return {asinh(sh), atan2(rho * ch, x[2] * sh), phi};
    }
  }
  return x;
}

/// Coordinate tangent vectors e_i = dx/dq_i, in Cartesian components.
template <class T>
Frame<T> tangent_frame(const Chart& c, const std::array<T, 3>& q) {
  const T& xi = q[0];
  const T& eta = q[1];
  T cp = cos(q[2]);
  T sp = sin(q[2]);
  switch (c.kind) {
    case ChartKind::Cartesian:
      return {{{T(1.0), T(0.0), T(0.0)}, {T(0.0), T(1.0), T(0.0)}, {T(0.0), T(0.0), T(1.0)}}};
    case ChartKind::CircularParabolic: {
      T rho = xi * eta;
      return {{{eta * cp, eta * sp, xi}, {xi * cp, xi * sp, -eta}, {-rho * sp, rho * cp, T(0.0)}}};
    }
    case ChartKind::OblateSpheroidal: {
      T sh = sinh(xi), ch = cosh(xi), se = sin(eta), ce = cos(eta);
      double a = c.a;
      T rho = a * ch * se;
      return {{{a * sh * se * cp, a * sh * se * sp, a * ch * ce},
               {a * ch * ce * cp, a * ch * ce * sp, -a * sh * se},
               {-rho * sp, rho * cp, T(0.0)}}};
    }
    case ChartKind::ProlateSpheroidal: {
      T sh = sinh(xi), ch = cosh(xi), se = sin(eta), ce = cos(eta);
      double a = c.a;
      T rho = a * sh * se;
      return {{{a * ch * se * cp, a * ch * se * sp, a * sh * ce},
               {a * sh * ce * cp, a * sh * ce * sp, -a * ch * se},
               {-rho * sp, rho * cp, T(0.0)}}};
    }
  }
  return {};
}

/// Diagonal metric entries (g_11, g_22, g_33).
template <class T>
std::array<T, 3> metric_diag(const Chart& c, const std::array<T, 3>& q) {
  const T& xi = q[0];
  const T& eta = q[1];
  switch (c.kind) {
    case ChartKind::Cartesian:
      return {T(1.0), T(1.0), T(1.0)};
    case ChartKind::CircularParabolic: {
      T s = xi * xi + eta * eta;
      return {s, s, xi * xi * eta * eta};
    }
    case ChartKind::OblateSpheroidal: {
      T ch2 = sqr(cosh(xi)), se2 = sqr(sin(eta));
      double a2 = c.a * c.a;
      T d = a2 * (ch2 - se2);
      return {d, d, a2 * ch2 * se2};
    }
    case ChartKind::ProlateSpheroidal: {
      T sh2 = sqr(sinh(xi)), se2 = sqr(sin(eta));
      double a2 = c.a * c.a;
      T d = a2 * (sh2 + se2);
      return {d, d, a2 * sh2 * se2};
    }
  }
  return {};
}

/// Chart components of a one-form to Cartesian components.
template <class T>
std::array<T, 3> oneform_to_cartesian(const Chart& c, const std::array<T, 3>& q, const std::array<T, 3>& w) {
  if (c.kind == ChartKind::Cartesian) return w;
  auto e = tangent_frame(c, q);
  auto g = metric_diag(c, q);
  std::array<T, 3> out{T(0.0), T(0.0), T(0.0)};
  for (int i = 0; i < 3; ++i) {
    T s = w[i] / g[i];
    for (int k = 0; k < 3; ++k) out[k] = out[k] + s * e[i][k];
  }
  return out;
}

/// Cartesian one-form components to chart components: w_i = e_i . w_cart.
template <class T>
std::array<T, 3> oneform_from_cartesian(const Chart& c, const std::array<T, 3>& q, const std::array<T, 3>& w) {
  if (c.kind == ChartKind::Cartesian) return w;
  auto e = tangent_frame(c, q);
  std::array<T, 3> out;
  for (int i = 0; i < 3; ++i) out[i] = e[i][0] * w[0] + e[i][1] * w[1] + e[i][2] * w[2];
  return out;
}

/// Components (B_1, B_2, B_3) of the two-form B_1 dq2^dq3 + ... converted to
/// the Cartesian field vector, B = sum_i B_i e_i / sqrt(det g).
template <class T>
std::array<T, 3> twoform_to_cartesian(const Chart& c, const std::array<T, 3>& q, const std::array<T, 3>& b) {
  if (c.kind == ChartKind::Cartesian) return b;
  auto e = tangent_frame(c, q);
  auto g = metric_diag(c, q);
  T inv_vol = 1.0 / sqrt(g[0] * g[1] * g[2]);
  std::array<T, 3> out{T(0.0), T(0.0), T(0.0)};
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) out[k] = out[k] + b[i] * inv_vol * e[i][k];
  return out;
}

template <class T>
std::array<T, 6> phase_to_cartesian(const Chart& c, const std::array<T, 6>& z) {
  if (c.kind == ChartKind::Cartesian) return z;
  std::array<T, 3> q{z[0], z[1], z[2]}, p{z[3], z[4], z[5]};
  auto x = chart_to_cartesian(c, q);
  auto pc = oneform_to_cartesian(c, q, p);
  return {x[0], x[1], x[2], pc[0], pc[1], pc[2]};
}

template <class T>
std::array<T, 6> phase_from_cartesian(const Chart& c, const std::array<T, 6>& z) {
  if (c.kind == ChartKind::Cartesian) return z;
  std::array<T, 3> x{z[0], z[1], z[2]}, p{z[3], z[4], z[5]};
  auto q = chart_from_cartesian(c, x);
  auto pq = oneform_from_cartesian(c, q, p);
  return {q[0], q[1], q[2], pq[0], pq[1], pq[2]};
}

// --- checked public API ------------------------------------------------------

namespace detail {

inline std::string fmt3(const Vec3& v) {
  std::ostringstream os;
  os.precision(17);
  os << '(' << v[0] << ", " << v[1] << ", " << v[2] << ')';
  return os.str();
}

}  // namespace detail

inline double axis_distance(const Vec3& x) { return std::hypot(x[0], x[1]); }

/// Throws OutOfRange when q leaves the chart's coordinate ranges.
inline void require_in_range(const Chart& c, const Vec3& q) {
  for (double v : q)
    if (!std::isfinite(v)) throw OutOfRange("non-finite coordinate " + detail::fmt3(q));
  if (c.kind == ChartKind::Cartesian) return;
  const double pi = std::numbers::pi;
  bool ok = q[0] > 0.0 && q[2] > -pi && q[2] <= pi;
  if (c.kind == ChartKind::CircularParabolic)
    ok = ok && q[1] > 0.0;
  else
    ok = ok && q[1] > 0.0 && q[1] < pi;
  if (!ok) throw OutOfRange(std::string(chart_name(c.kind)) + " coordinates out of range " + detail::fmt3(q));
}

/// Range check plus distance from the z-axis; the curvilinear denominators all
/// vanish there.
inline void require_interior(const Chart& c, const Vec3& q, double margin = kAxisMargin) {
  require_in_range(c, q);
  Vec3 x = chart_to_cartesian(c, q);
  if (c.kind != ChartKind::Cartesian && axis_distance(x) <= margin)
    throw AxisSingularity("point within axis margin " + detail::fmt3(q));
}

inline Vec3 to_cartesian(const Chart& c, const Vec3& q) {
  require_in_range(c, q);
  return chart_to_cartesian(c, q);
}

inline Vec3 from_cartesian(const Chart& c, const Vec3& x, double margin = kAxisMargin) {
  for (double v : x)
    if (!std::isfinite(v)) throw OutOfRange("non-finite Cartesian position " + detail::fmt3(x));
  if (c.kind == ChartKind::Cartesian) return x;
  if (axis_distance(x) <= margin) throw AxisSingularity("position on the z-axis " + detail::fmt3(x));
  return chart_from_cartesian(c, x);
}

struct Metric {
  Vec3 diag{};
  bool degenerate = false;  // smallest entry negligible against the largest
};

inline Metric metric(const Chart& c, const Vec3& q) {
  require_in_range(c, q);
  Metric m{metric_diag(c, q), false};
  double lo = std::min({m.diag[0], m.diag[1], m.diag[2]});
  double hi = std::max({m.diag[0], m.diag[1], m.diag[2]});
  m.degenerate = lo <= 1e-12 * hi;
  return m;
}

inline Vec3 pullback_oneform(const Chart& c, const Vec3& q, const Vec3& a_chart, double margin = kAxisMargin) {
  require_interior(c, q, margin);
  return oneform_to_cartesian(c, q, a_chart);
}

inline Vec3 oneform_in_chart(const Chart& c, const Vec3& q, const Vec3& a_cart, double margin = kAxisMargin) {
  require_interior(c, q, margin);
  return oneform_from_cartesian(c, q, a_cart);
}

inline PhasePoint push_phase(const PhasePoint& pt, const Chart& target, double margin = kAxisMargin) {
  if (pt.chart == target) return pt;
  if (pt.chart.kind != ChartKind::Cartesian) require_interior(pt.chart, pt.q, margin);
  Vec6 cart = phase_to_cartesian(pt.chart, pt.z());
  if (target.kind == ChartKind::Cartesian) return PhasePoint::from_z(target, cart);
  if (axis_distance({cart[0], cart[1], cart[2]}) <= margin)
    throw AxisSingularity("position on the z-axis " + detail::fmt3({cart[0], cart[1], cart[2]}));
  return PhasePoint::from_z(target, phase_from_cartesian(target, cart));
}

}  // namespace magsi
