#pragma once

// The integrable families (circular parabolic, oblate, prolate) over a
// ProfileSet, and the named superintegrable systems, as evaluatable models.
//
// Naming of integrals: "X1", "X2tilde" (first-order form of X2), "Y3", "Y4".
// H is kept separately as SystemModel::hamiltonian.

#include <algorithm>
#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "magsi/dual.hpp"
#include "magsi/errors.hpp"
#include "magsi/expr.hpp"
#include "magsi/fields.hpp"
#include "magsi/geometry.hpp"

namespace magsi {

struct NamedIntegral {
  std::string name;
  PhaseScalar fn;
};

struct SystemModel {
  std::string family;
  Chart chart;
  PhaseScalar hamiltonian;
  ConfigScalar potential;  // W
  VectorPotential vector_potential;
  MagneticField field;
  std::vector<NamedIntegral> integrals;
  /// Integral pairs claimed to be in involution (besides each with H).
  std::vector<std::pair<std::string, std::string>> commuting_pairs;
  std::map<std::string, double> params;
  std::optional<ProfileSet> profiles;
  /// Whether A or W blows up on the z-axis (gauge strings, 1/rho^2 terms).
  bool axis_singular = true;

  const PhaseScalar& integral(std::string_view name) const {
    if (name == "H") return hamiltonian;
    for (const auto& i : integrals)
      if (i.name == name) return i.fn;
    throw Error("system '" + family + "' has no integral named '" + std::string(name) + "'");
  }

  /// H followed by the named integrals.
  std::vector<NamedIntegral> all_functions() const {
    std::vector<NamedIntegral> out{{"H", hamiltonian}};
    out.insert(out.end(), integrals.begin(), integrals.end());
    return out;
  }

  double param(const std::string& key) const {
    auto it = params.find(key);
    if (it == params.end()) throw Error("system '" + family + "' has no parameter '" + key + "'");
    return it->second;
  }
};

// ---------------------------------------------------------------------------

namespace detail {

/// 1/2 sum_i (p_i + A_i)^2 / g_ii in an orthogonal chart.
template <class T>
T kinetic(const Chart& c, const std::array<T, 3>& q, const std::array<T, 3>& p, const std::array<T, 3>& a) {
  auto g = metric_diag(c, q);
  T k = 0.0;
  for (int i = 0; i < 3; ++i) k = k + sqr(p[i] + a[i]) / g[i];
  return 0.5 * k;
}

template <class T>
void split(const std::array<T, 6>& z, std::array<T, 3>& q, std::array<T, 3>& p) {
  q = {z[0], z[1], z[2]};
  p = {z[3], z[4], z[5]};
}

/// Gauge-covariant Cartesian kinematics: p^A = p + A and L^A = x cross p^A.
template <class T>
struct Kinematics {
  std::array<T, 3> x, pa, l;
  T rho2, r;

  Kinematics(const std::array<T, 6>& z, const std::array<T, 3>& a) {
    x = {z[0], z[1], z[2]};
    for (int i = 0; i < 3; ++i) pa[i] = z[3 + i] + a[i];
    l = {x[1] * pa[2] - x[2] * pa[1], x[2] * pa[0] - x[0] * pa[2], x[0] * pa[1] - x[1] * pa[0]};
    rho2 = x[0] * x[0] + x[1] * x[1];
    r = sqrt(rho2 + x[2] * x[2]);
  }
  T kinetic() const { return 0.5 * (pa[0] * pa[0] + pa[1] * pa[1] + pa[2] * pa[2]); }
  T l2() const { return l[0] * l[0] + l[1] * l[1] + l[2] * l[2]; }
  /// L_x p_y - L_y p_x, the leading part of the parabolic integral X1.
  T parabolic_lead() const { return l[0] * pa[1] - l[1] * pa[0]; }
};

inline ConfigScalar zero_config() {
  return ConfigScalar([](const auto& q) { return std::remove_cvref_t<decltype(q[0])>(0.0); });
}

inline void check_profiles(const ProfileSet& p, double lo, double hi, std::string_view family) {
  const Expr* fns[] = {&p.f, &p.g, &p.alpha, &p.beta};
  const char* names[] = {"f", "g", "alpha", "beta"};
  for (int k = 0; k < 4; ++k) {
    for (int i = 0; i <= 64; ++i) {
      double s = lo + (hi - lo) * i / 64.0;
      double v = (*fns[k])(s);
      double dv = fns[k]->derivative(s);
      if (!std::isfinite(v) || !std::isfinite(dv))
        throw ProfileDomain(std::string(family) + ": profile " + names[k] + " not finite at argument " +
                            std::to_string(s));
    }
  }
}

// Verification box bounds (xi, eta in [0.3, 2.5]).
inline constexpr double kBoxLo = 0.3;
inline constexpr double kBoxHi = 2.5;

// --- circular parabolic family ----------------------------------------------

struct ParabolicFamily {
  ProfileSet pr;

  template <class T>
  struct Terms {
    T xi2, eta2, s, f, g, alpha, beta;
  };

  template <class T>
  Terms<T> terms(const T& xi, const T& eta) const {
    T xi2 = xi * xi, eta2 = eta * eta;
    return {xi2, eta2, xi2 + eta2, pr.f(eta2), pr.g(xi2), pr.alpha(eta2), pr.beta(xi2)};
  }

  template <class T>
  T a_phi(const std::array<T, 3>& q) const {
    auto t = terms(q[0], q[1]);
    return -(t.xi2 * t.f + t.eta2 * t.g) / t.s;
  }

  template <class T>
  T potential(const std::array<T, 3>& q) const {
    auto t = terms(q[0], q[1]);
    return 0.5 * sqr((t.f - t.g) / t.s) + (t.eta2 * t.beta - t.xi2 * t.alpha) / (t.xi2 * t.eta2 * t.s);
  }

  template <class T>
  T hamiltonian(const std::array<T, 6>& z) const {
    std::array<T, 3> q, p;
    split(z, q, p);
    std::array<T, 3> a{T(0.0), T(0.0), a_phi(q)};
    return kinetic(Chart::circular_parabolic(), q, p, a) + potential(q);
  }

  template <class T>
  T x1(const std::array<T, 6>& z) const {
    auto t = terms(z[0], z[1]);
    T pphi = z[5] - (t.xi2 * t.f + t.eta2 * t.g) / t.s;
    return (t.eta2 * sqr(z[3]) - t.xi2 * sqr(z[4])) / (2.0 * t.s) + 0.5 * (1.0 / t.xi2 - 1.0 / t.eta2) * sqr(pphi) +
           ((t.f - t.g) / t.s) * pphi +
           (t.xi2 * t.xi2 * t.alpha + t.eta2 * t.eta2 * t.beta) / (t.eta2 * t.xi2 * t.s);
  }

  template <class T>
  T x2tilde(const std::array<T, 6>& z) const {
    auto t = terms(z[0], z[1]);
    T shift = (t.xi2 * t.f + t.eta2 * t.g) / t.s;
    return (z[5] - shift) + shift;
  }

  template <class T>
  std::array<T, 3> field(const std::array<T, 3>& q) const {
    const T& xi = q[0];
    const T& eta = q[1];
    auto t = terms(xi, eta);
    T fp = pr.f.derivative(t.eta2);
    T gp = pr.g.derivative(t.xi2);
    T s2 = t.s * t.s;
    T b_xi = -2.0 * eta * t.xi2 * (t.s * fp - t.f + t.g) / s2;
    T b_eta = 2.0 * t.eta2 * xi * (t.s * gp + t.f - t.g) / s2;
    return {b_xi, b_eta, T(0.0)};
  }
};

// --- oblate / prolate families ------------------------------------------------

struct SpheroidalFamily {
  ProfileSet pr;
  double a;
  bool oblate;

  Chart chart() const { return oblate ? Chart::oblate(a) : Chart::prolate(a); }

  // Oblate: c = cosh^2 xi, d = c - sin^2 eta. Prolate: c = sinh^2 xi, d = c + sin^2 eta.
  template <class T>
  struct Terms {
    T c, se2, d, f, g, alpha, beta;
  };

  template <class T>
  Terms<T> terms(const T& xi, const T& eta) const {
    T c = oblate ? sqr(cosh(xi)) : sqr(sinh(xi));
    T se2 = sqr(sin(eta));
    T d = oblate ? c - se2 : c + se2;
    return {c, se2, d, pr.f(eta), pr.g(xi), pr.alpha(eta), pr.beta(xi)};
  }

  template <class T>
  T a_phi(const std::array<T, 3>& q) const {
    auto t = terms(q[0], q[1]);
    if (oblate) return (t.se2 * t.g - t.c * t.f) / (2.0 * t.d);
    return -(t.se2 * t.g + t.c * t.f) / (2.0 * t.d);
  }

  template <class T>
  T potential(const std::array<T, 3>& q) const {
    auto t = terms(q[0], q[1]);
    T base = (t.alpha + t.beta) / (2.0 * a * a * t.d);
    if (oblate) return base - 0.5 * sqr((t.f - t.g) / (2.0 * a * t.d));
    return base + 0.125 * sqr((t.f - t.g) / (a * t.d));
  }

  template <class T>
  T hamiltonian(const std::array<T, 6>& z) const {
    std::array<T, 3> q, p;
    split(z, q, p);
    std::array<T, 3> av{T(0.0), T(0.0), a_phi(q)};
    return kinetic(chart(), q, p, av) + potential(q);
  }

  template <class T>
  T x1(const std::array<T, 6>& z) const {
    auto t = terms(z[0], z[1]);
    std::array<T, 3> q{z[0], z[1], z[2]};
    T pphi = z[5] + a_phi(q);
    if (oblate)
      return (t.se2 * sqr(z[3]) + t.c * sqr(z[4])) / t.d + (t.c + t.se2) / (t.c * t.se2) * sqr(pphi) +
             ((t.f - t.g) / t.d) * pphi + (t.c * t.alpha + t.se2 * t.beta) / t.d;
    return (t.c * sqr(z[4]) - t.se2 * sqr(z[3])) / t.d + (t.c - t.se2) / (t.c * t.se2) * sqr(pphi) +
           ((t.g - t.f) / t.d) * pphi + (t.c * t.alpha - t.se2 * t.beta) / t.d;
  }

  template <class T>
  T x2tilde(const std::array<T, 6>& z) const {
    auto t = terms(z[0], z[1]);
    std::array<T, 3> q{z[0], z[1], z[2]};
    T pphi = z[5] + a_phi(q);
    if (oblate) return pphi + (t.c * t.f - t.se2 * t.g) / (2.0 * t.d);
    return pphi + (t.c * t.f + t.se2 * t.g) / (2.0 * t.d);
  }

  template <class T>
  std::array<T, 3> field(const std::array<T, 3>& q) const {
    const T& xi = q[0];
    const T& eta = q[1];
    auto t = terms(xi, eta);
    T fp = pr.f.derivative(eta);
    T gp = pr.g.derivative(xi);
    T d2 = t.d * t.d;
    T se = sin(eta), ce = cos(eta), sh = sinh(xi), ch = cosh(xi);
    if (oblate) {
      T b_xi = (t.g - t.f) * se * ce * t.c / d2 - t.c * fp / (2.0 * t.d);
      T b_eta = (t.g - t.f) * t.se2 * sh * ch / d2 - t.se2 * gp / (2.0 * t.d);
      return {b_xi, b_eta, T(0.0)};
    }
    T b_xi = (t.f - t.g) * se * ce * t.c / d2 - t.c * fp / (2.0 * t.d);
    T b_eta = (t.f - t.g) * t.se2 * sh * ch / d2 + t.se2 * gp / (2.0 * t.d);
    return {b_xi, b_eta, T(0.0)};
  }
};

template <class Family>
SystemModel family_model(const Family& fam, Chart chart, std::string name, const ProfileSet& pr) {
  SystemModel m;
  m.family = std::move(name);
  m.chart = chart;
  m.hamiltonian = PhaseScalar([fam](const auto& z) { return fam.hamiltonian(z); });
  m.potential = ConfigScalar([fam](const auto& q) { return fam.potential(q); });
  m.vector_potential = {chart,
                        {zero_config(), zero_config(), ConfigScalar([fam](const auto& q) { return fam.a_phi(q); })}};
  m.field = {chart,
             {ConfigScalar([fam](const auto& q) { return fam.field(q)[0]; }),
              ConfigScalar([fam](const auto& q) { return fam.field(q)[1]; }), zero_config()}};
  m.integrals = {{"X1", PhaseScalar([fam](const auto& z) { return fam.x1(z); })},
                 {"X2tilde", PhaseScalar([fam](const auto& z) { return fam.x2tilde(z); })}};
  m.commuting_pairs = {{"X1", "X2tilde"}};
  m.profiles = pr;
  m.axis_singular = true;
  return m;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Families

inline SystemModel circular_parabolic_system(const ProfileSet& profiles) {
  ProfileSet pr = profiles;
  pr.argument = ProfileArgument::Squared;
  detail::check_profiles(pr, detail::kBoxLo * detail::kBoxLo, detail::kBoxHi * detail::kBoxHi, "circular_parabolic");
  return detail::family_model(detail::ParabolicFamily{pr}, Chart::circular_parabolic(), "circular_parabolic", pr);
}

inline SystemModel oblate_system(double a, const ProfileSet& profiles) {
  Chart chart = Chart::oblate(a);
  ProfileSet pr = profiles;
  pr.argument = ProfileArgument::Direct;
  detail::check_profiles(pr, detail::kBoxLo, detail::kBoxHi, "oblate");
  auto m = detail::family_model(detail::SpheroidalFamily{pr, a, true}, chart, "oblate", pr);
  m.params["a"] = a;
  return m;
}

inline SystemModel prolate_system(double a, const ProfileSet& profiles) {
  Chart chart = Chart::prolate(a);
  ProfileSet pr = profiles;
  pr.argument = ProfileArgument::Direct;
  detail::check_profiles(pr, detail::kBoxLo, detail::kBoxHi, "prolate");
  auto m = detail::family_model(detail::SpheroidalFamily{pr, a, false}, chart, "prolate", pr);
  m.params["a"] = a;
  return m;
}

// ---------------------------------------------------------------------------
// Profile sets of the named subcases

/// Circular parabolic profiles reproducing the constant-field system (case 1).
inline ProfileSet case1_parabolic_profiles(double b_z, double omega) {
  Expr s = Expr::var();
  return {-0.5 * b_z * pow(s, 2), -0.5 * b_z * pow(s, 2), Expr::constant(-omega) + (b_z * b_z / 8.0) * pow(s, 4),
          Expr::constant(omega) + (-b_z * b_z / 8.0) * pow(s, 4), ProfileArgument::Squared};
}

/// Circular parabolic profiles of the constant-field, z-oscillator system (case 2).
inline ProfileSet case2_parabolic_profiles(double b_z) {
  Expr s = Expr::var();
  return {-0.5 * b_z * pow(s, 2), -0.5 * b_z * pow(s, 2), Expr::constant(0.0), Expr::constant(0.0),
          ProfileArgument::Squared};
}

/// Circular parabolic profiles of the monopole-plus-Coulomb system (case 3).
/// beta carries a factor xi^2 so that W = omega / (xi^2 + eta^2).
inline ProfileSet case3_parabolic_profiles(double b_m, double omega) {
  return {Expr::constant(b_m), Expr::constant(-b_m), Expr::constant(0.0), omega * Expr::var(),
          ProfileArgument::Squared};
}

/// Oblate profiles whose Cartesian form is the constant-field system (case 1).
/// The powers of `a` are fixed so that the identification holds for every a > 0.
inline ProfileSet oblate_case1_profiles(double a, double b_z, double omega) {
  Expr s = Expr::var();
  double a2 = a * a, k = a2 * a2 * b_z * b_z;
  return {(a2 * b_z) * pow(sin(s), 4), (a2 * b_z) * pow(cosh(s), 4),
          Expr::constant(5.0 * k / 64.0) + (-k / 4.0) * pow(sin(s), 6) + (2.0 * omega) * pow(sin(s), -2),
          Expr::constant(-5.0 * k / 64.0) + (k / 4.0) * pow(cosh(s), 6) + (-2.0 * omega) * pow(cosh(s), -2),
          ProfileArgument::Direct};
}

inline ProfileSet prolate_case1_profiles(double a, double b_z, double omega) {
  Expr s = Expr::var();
  double a2 = a * a, k = a2 * a2 * b_z * b_z;
  return {(-a2 * b_z) * pow(sin(s), 4), (-a2 * b_z) * pow(sinh(s), 4),
          Expr::constant(5.0 * k / 64.0) + (-k / 4.0) * pow(sin(s), 6) + (2.0 * omega) * pow(sin(s), -2),
          Expr::constant(-5.0 * k / 64.0) + (-k / 4.0) * pow(sinh(s), 6) + (2.0 * omega) * pow(sinh(s), -2),
          ProfileArgument::Direct};
}

// ---------------------------------------------------------------------------
// Named Cartesian systems

inline SystemModel named_case1(double b_z, double omega) {
  auto pot = [b_z](const auto& x) {
    using T = std::remove_cvref_t<decltype(x[0])>;
    return std::array<T, 3>{-0.5 * b_z * x[1], 0.5 * b_z * x[0], T(0.0)};
  };
  auto kin = [pot](const auto& z) {
    return detail::Kinematics(z, pot(std::array{z[0], z[1], z[2]}));
  };
  SystemModel m;
  m.family = "case1";
  m.chart = Chart::cartesian();
  m.params = {{"b_z", b_z}, {"omega", omega}};
  m.axis_singular = omega != 0.0;
  m.hamiltonian = PhaseScalar([kin, b_z, omega](const auto& z) {
    auto k = kin(z);
    return k.kinetic() - (b_z * b_z / 8.0) * k.rho2 + omega / k.rho2;
  });
  m.potential = ConfigScalar([b_z, omega](const auto& x) {
    auto rho2 = x[0] * x[0] + x[1] * x[1];
    return -(b_z * b_z / 8.0) * rho2 + omega / rho2;
  });
  m.vector_potential = {m.chart,
                        {ConfigScalar([pot](const auto& x) { return pot(x)[0]; }),
                         ConfigScalar([pot](const auto& x) { return pot(x)[1]; }), detail::zero_config()}};
  m.field = {m.chart,
             {detail::zero_config(), detail::zero_config(), ConfigScalar([b_z](const auto& x) {
                return std::remove_cvref_t<decltype(x[0])>(b_z);
              })}};
  m.integrals = {
      {"X1", PhaseScalar([kin, b_z, omega](const auto& z) {
         auto k = kin(z);
         return k.parabolic_lead() + b_z * z[2] * k.l[2] - 0.25 * b_z * b_z * z[2] * k.rho2 - 2.0 * omega * z[2] / k.rho2;
       })},
      {"X2tilde", PhaseScalar([kin, b_z](const auto& z) {
         auto k = kin(z);
         return k.l[2] - 0.5 * b_z * k.rho2;
       })},
      {"Y3", PhaseScalar([kin](const auto& z) { return kin(z).pa[2]; })},
  };
  m.commuting_pairs = {{"X1", "X2tilde"}, {"X2tilde", "Y3"}};
  return m;
}

inline SystemModel named_case2(double b_z) {
  auto pot = [b_z](const auto& x) {
    using T = std::remove_cvref_t<decltype(x[0])>;
    return std::array<T, 3>{-0.5 * b_z * x[1], 0.5 * b_z * x[0], T(0.0)};
  };
  auto kin = [pot](const auto& z) { return detail::Kinematics(z, pot(std::array{z[0], z[1], z[2]})); };
  SystemModel m;
  m.family = "case2";
  m.chart = Chart::cartesian();
  m.params = {{"b_z", b_z}};
  m.axis_singular = false;
  m.hamiltonian = PhaseScalar([kin, b_z](const auto& z) { return kin(z).kinetic() + 0.5 * b_z * b_z * sqr(z[2]); });
  m.potential = ConfigScalar([b_z](const auto& x) { return 0.5 * b_z * b_z * sqr(x[2]); });
  m.vector_potential = {m.chart,
                        {ConfigScalar([pot](const auto& x) { return pot(x)[0]; }),
                         ConfigScalar([pot](const auto& x) { return pot(x)[1]; }), detail::zero_config()}};
  m.field = {m.chart,
             {detail::zero_config(), detail::zero_config(), ConfigScalar([b_z](const auto& x) {
                return std::remove_cvref_t<decltype(x[0])>(b_z);
              })}};
  m.integrals = {
      {"X1", PhaseScalar([kin, b_z](const auto& z) {
         auto k = kin(z);
         return k.parabolic_lead() + b_z * z[2] * k.l[2];
       })},
      {"X2tilde", PhaseScalar([kin, b_z](const auto& z) {
         auto k = kin(z);
         return k.l[2] - 0.5 * b_z * k.rho2;
       })},
      {"Y3", PhaseScalar([kin, b_z](const auto& z) { return kin(z).pa[0] + b_z * z[1]; })},
      {"Y4", PhaseScalar([kin, b_z](const auto& z) { return kin(z).pa[1] - b_z * z[0]; })},
  };
  m.commuting_pairs = {{"X1", "X2tilde"}};
  return m;
}

namespace detail {

/// Vector potential of the L^2 system's field: monopole (b_m, with the string on
/// the z-axis), the b_n term and a uniform b_z.
template <class T>
std::array<T, 3> l2_potential(const std::array<T, 3>& x, double b_z, double b_m, double b_n) {
  T rho2 = x[0] * x[0] + x[1] * x[1];
  T r = sqrt(rho2 + x[2] * x[2]);
  T mono = b_m * x[2] / (rho2 * r);
  T ring = b_n / r + 0.5 * b_z;
  return {mono * x[1] - ring * x[1], -mono * x[0] + ring * x[0], T(0.0)};
}

template <class T>
std::array<T, 3> l2_field(const std::array<T, 3>& x, double b_z, double b_m, double b_n) {
  T r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
  T r = sqrt(r2);
  T r3 = r2 * r;
  return {(b_m * x[0] + b_n * x[0] * x[2]) / r3, (b_m * x[1] + b_n * x[1] * x[2]) / r3,
          (b_m * x[2] + b_n * (r2 + x[2] * x[2])) / r3 + b_z};
}

}  // namespace detail

inline SystemModel named_case3(double b_m, double omega) {
  auto pot = [b_m](const auto& x) { return detail::l2_potential(x, 0.0, b_m, 0.0); };
  auto kin = [pot](const auto& z) { return detail::Kinematics(z, pot(std::array{z[0], z[1], z[2]})); };
  SystemModel m;
  m.family = "case3";
  m.chart = Chart::cartesian();
  m.params = {{"b_m", b_m}, {"omega", omega}};
  m.axis_singular = true;
  m.hamiltonian = PhaseScalar([kin, b_m, omega](const auto& z) {
    auto k = kin(z);
    return k.kinetic() + b_m * b_m / (2.0 * k.r * k.r) + omega / (2.0 * k.r);
  });
  m.potential = ConfigScalar([b_m, omega](const auto& x) {
    auto r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    return b_m * b_m / (2.0 * r2) + omega / (2.0 * sqrt(r2));
  });
  m.vector_potential = {m.chart,
                        {ConfigScalar([pot](const auto& x) { return pot(x)[0]; }),
                         ConfigScalar([pot](const auto& x) { return pot(x)[1]; }), detail::zero_config()}};
  auto fld = [b_m](const auto& x) { return detail::l2_field(x, 0.0, b_m, 0.0); };
  m.field = {m.chart,
             {ConfigScalar([fld](const auto& x) { return fld(x)[0]; }),
              ConfigScalar([fld](const auto& x) { return fld(x)[1]; }),
              ConfigScalar([fld](const auto& x) { return fld(x)[2]; })}};
  m.integrals = {
      {"X1", PhaseScalar([kin, b_m, omega](const auto& z) {
         auto k = kin(z);
         return k.parabolic_lead() + b_m * k.l[2] / k.r - omega * z[2] / (2.0 * k.r);
       })},
      {"X2tilde", PhaseScalar([kin, b_m](const auto& z) {
         auto k = kin(z);
         return k.l[2] + b_m * z[2] / k.r;
       })},
      {"Y3", PhaseScalar([kin, b_m](const auto& z) {
         auto k = kin(z);
         return k.l[0] + b_m * z[0] / k.r;
       })},
      {"Y4", PhaseScalar([kin, b_m](const auto& z) {
         auto k = kin(z);
         return k.l[1] + b_m * z[1] / k.r;
       })},
  };
  m.commuting_pairs = {{"X1", "X2tilde"}};
  return m;
}

struct L2Params {
  double b_z = 0, b_m = 0, b_n = 0, u1 = 0, u2 = 0, u3 = 0;

  std::map<std::string, double> as_map() const {
    return {{"b_z", b_z}, {"b_m", b_m}, {"b_n", b_n}, {"u1", u1}, {"u2", u2}, {"u3", u3}};
  }
  static L2Params from_map(const std::map<std::string, double>& m) {
    auto get = [&](const char* k) {
      auto it = m.find(k);
      return it == m.end() ? 0.0 : it->second;
    };
    return {get("b_z"), get("b_m"), get("b_n"), get("u1"), get("u2"), get("u3")};
  }
};

/// The three reference parameter sets of the L^2 system whose orbits from
/// reference_initial_point() are expected to be bounded and (nearly) closed.
enum class ReferenceOrbit { WeakMonopole, StrongMonopole, NoMonopole };

inline const char* reference_orbit_name(ReferenceOrbit r) {
  switch (r) {
    case ReferenceOrbit::WeakMonopole: return "weak_monopole";
    case ReferenceOrbit::StrongMonopole: return "strong_monopole";
    case ReferenceOrbit::NoMonopole: return "no_monopole";
  }
  return "?";
}

inline L2Params reference_params(ReferenceOrbit r) {
  switch (r) {
    case ReferenceOrbit::WeakMonopole: return {-2.0 / 7.0, -0.5, -2.5, 1.0 / 6.0, -1.5, 0.0};
    case ReferenceOrbit::StrongMonopole: return {-2.0 / 7.0, -2.5, -2.5, 1.0 / 6.0, -1.5, 0.0};
    case ReferenceOrbit::NoMonopole: return {0.0, 0.0, -2.0, 0.5, -1.0, -0.25};
  }
  throw Error("unknown reference orbit");
}

/// x=(1,0,0), p=(0,1,1/2).
inline PhasePoint reference_initial_point() { return {Chart::cartesian(), {1.0, 0.0, 0.0}, {0.0, 1.0, 0.5}}; }

/// The system with the additional L^2-type integral, in Cartesian coordinates.
inline SystemModel l2_system(const L2Params& P) {
  auto pot = [P](const auto& x) { return detail::l2_potential(x, P.b_z, P.b_m, P.b_n); };
  auto kin = [pot](const auto& z) { return detail::Kinematics(z, pot(std::array{z[0], z[1], z[2]})); };
  auto scalar_pot = [P](const auto& x) {
    auto rho2 = x[0] * x[0] + x[1] * x[1];
    auto r2 = rho2 + x[2] * x[2];
    auto r = sqrt(r2);
    const auto& z = x[2];
    return P.u1 / rho2 + P.u2 / r + P.u3 * z / (rho2 * r) + P.b_m * P.b_m / (2.0 * r2) +
           P.b_z * P.b_m * z / (2.0 * r) - P.b_z * P.b_n * rho2 / (2.0 * r) + P.b_m * P.b_n * z / r2 -
           P.b_n * P.b_n * rho2 / (2.0 * r2) - P.b_z * P.b_z * rho2 / 8.0;
  };
  SystemModel m;
  m.family = "l2";
  m.chart = Chart::cartesian();
  m.params = P.as_map();
  m.axis_singular = true;
  m.hamiltonian = PhaseScalar([kin, scalar_pot](const auto& z) {
    return kin(z).kinetic() + scalar_pot(std::array{z[0], z[1], z[2]});
  });
  m.potential = ConfigScalar(scalar_pot);
  m.vector_potential = {m.chart,
                        {ConfigScalar([pot](const auto& x) { return pot(x)[0]; }),
                         ConfigScalar([pot](const auto& x) { return pot(x)[1]; }), detail::zero_config()}};
  auto fld = [P](const auto& x) { return detail::l2_field(x, P.b_z, P.b_m, P.b_n); };
  m.field = {m.chart,
             {ConfigScalar([fld](const auto& x) { return fld(x)[0]; }),
              ConfigScalar([fld](const auto& x) { return fld(x)[1]; }),
              ConfigScalar([fld](const auto& x) { return fld(x)[2]; })}};
  m.integrals = {
      {"X1", PhaseScalar([kin, P](const auto& z) {
         auto k = kin(z);
         const auto& zz = z[2];
         return k.parabolic_lead() + k.l[2] * (P.b_m / k.r + P.b_n * zz / k.r + P.b_z * zz) -
                P.b_m * P.b_z * k.rho2 / (2.0 * k.r) - P.b_n * P.b_z * zz * k.rho2 / (2.0 * k.r) -
                0.25 * P.b_z * P.b_z * zz * k.rho2 - 2.0 * P.u1 * zz / k.rho2 - P.u2 * zz / k.r -
                P.u3 * (k.r * k.r + zz * zz) / (k.rho2 * k.r);
       })},
      {"X2tilde", PhaseScalar([kin, P](const auto& z) {
         auto k = kin(z);
         return k.l[2] + P.b_m * z[2] / k.r - P.b_n * k.rho2 / k.r - 0.5 * P.b_z * k.rho2;
       })},
      {"Y3", PhaseScalar([kin, P](const auto& z) {
         auto k = kin(z);
         auto r2 = k.r * k.r;
         return k.l2() - k.l[2] * (2.0 * P.b_n * k.r + P.b_z * r2) + P.b_n * P.b_n * k.rho2 +
                P.b_n * P.b_z * k.rho2 * k.r + 0.25 * P.b_z * P.b_z * k.rho2 * r2 + 2.0 * P.u1 * sqr(z[2]) / k.rho2 +
                2.0 * P.u3 * z[2] * k.r / k.rho2;
       })},
  };
  m.commuting_pairs = {{"X1", "X2tilde"}, {"Y3", "X2tilde"}};
  return m;
}

/// The same system written in circular parabolic coordinates. Its A_phi puts
/// the monopole string on the other half-axis (A_cart = A_par + b_m dphi);
/// after that gauge change H and Y3 agree with l2_system's up to constants and
/// X1 up to b_n X2tilde plus a constant.
inline SystemModel l2_system_parabolic(const L2Params& P) {
  auto aphi = [P](const auto& q) {
    auto xi2 = q[0] * q[0];
    auto eta2 = q[1] * q[1];
    auto s = xi2 + eta2;
    return 0.5 * P.b_z * eta2 * xi2 - 2.0 * P.b_m * xi2 / s + 2.0 * P.b_n * eta2 * xi2 / s;
  };
  auto scalar_pot = [P](const auto& q) {
    auto xi2 = q[0] * q[0];
    auto eta2 = q[1] * q[1];
    auto s = xi2 + eta2;
    auto s2 = s * s;
    return 2.0 * P.b_m * P.b_m / s2 + P.b_m * P.b_z * xi2 / s - 2.0 * P.b_n * P.b_n * eta2 * xi2 / s2 -
           0.125 * P.b_z * P.b_z * eta2 * xi2 + P.b_n * (2.0 * P.b_m * (xi2 - eta2) / s2 - P.b_z * eta2 * xi2 / s) +
           P.u1 / (eta2 * xi2) + 2.0 * P.u2 / s + P.u3 * (xi2 - eta2) / (eta2 * xi2 * s);
  };
  const Chart chart = Chart::circular_parabolic();
  SystemModel m;
  m.family = "l2_parabolic";
  m.chart = chart;
  m.params = P.as_map();
  m.axis_singular = true;
  m.hamiltonian = PhaseScalar([aphi, scalar_pot](const auto& z) {
    auto xi2 = z[0] * z[0];
    auto eta2 = z[1] * z[1];
    auto s = xi2 + eta2;
    std::array q{z[0], z[1], z[2]};
    auto pphi = z[5] + aphi(q);
    return (sqr(z[3]) + sqr(z[4])) / (2.0 * s) + sqr(pphi) / (2.0 * eta2 * xi2) + scalar_pot(q);
  });
  m.potential = ConfigScalar(scalar_pot);
  m.vector_potential = {chart, {detail::zero_config(), detail::zero_config(), ConfigScalar(aphi)}};
  m.field = {chart,
             {ConfigScalar([P](const auto& q) {
                auto xi2 = q[0] * q[0];
                auto eta2 = q[1] * q[1];
                auto s2 = sqr(xi2 + eta2);
                return 4.0 * P.b_m * q[1] * xi2 / s2 + 4.0 * P.b_n * q[1] * xi2 * xi2 / s2 + P.b_z * q[1] * xi2;
              }),
              ConfigScalar([P](const auto& q) {
                auto xi2 = q[0] * q[0];
                auto eta2 = q[1] * q[1];
                auto s2 = sqr(xi2 + eta2);
                return 4.0 * P.b_m * eta2 * q[0] / s2 - 4.0 * P.b_n * eta2 * eta2 * q[0] / s2 - P.b_z * eta2 * q[0];
              }),
              detail::zero_config()}};
  m.integrals = {
      {"X1", PhaseScalar([aphi, P](const auto& z) {
         auto xi2 = z[0] * z[0];
         auto eta2 = z[1] * z[1];
         auto s = xi2 + eta2;
         auto pphi = z[5] + aphi(std::array{z[0], z[1], z[2]});
         return (eta2 * sqr(z[3]) - sqr(z[4]) * xi2) / (2.0 * s) + 0.5 * (1.0 / xi2 - 1.0 / eta2) * sqr(pphi) +
                P.b_n * (2.0 * P.b_m * eta2 / s + P.b_z * eta2 * eta2 * xi2 / s) +
                (2.0 * P.b_m / s - 2.0 * P.b_n * eta2 / s + 0.5 * P.b_z * (xi2 - eta2)) * pphi -
                P.b_m * P.b_z * eta2 * xi2 / s + 2.0 * P.b_n * P.b_n * eta2 * xi2 / s +
                0.125 * P.b_z * P.b_z * eta2 * xi2 * (eta2 - xi2) + P.u1 * (1.0 / xi2 - 1.0 / eta2) +
                2.0 * eta2 * P.u2 / s - P.u3 * (eta2 * eta2 + xi2 * xi2) / (eta2 * xi2 * s);
       })},
      {"X2tilde", PhaseScalar([aphi, P](const auto& z) {
         auto xi2 = z[0] * z[0];
         auto eta2 = z[1] * z[1];
         auto s = xi2 + eta2;
         auto pphi = z[5] + aphi(std::array{z[0], z[1], z[2]});
         return pphi + 2.0 * P.b_m * xi2 / s - 2.0 * P.b_n * eta2 * xi2 / s - 0.5 * P.b_z * eta2 * xi2;
       })},
      {"Y3", PhaseScalar([aphi, P](const auto& z) {
         const auto& xi = z[0];
         const auto& eta = z[1];
         auto xi2 = xi * xi;
         auto eta2 = eta * eta;
         auto s = xi2 + eta2;
         auto pphi = z[5] + aphi(std::array{z[0], z[1], z[2]});
         return sqr(z[4]) * xi2 / 4.0 + eta2 * sqr(z[3]) / 4.0 - 0.5 * eta * z[4] * z[3] * xi +
                sqr(pphi) * s * s / (4.0 * eta2 * xi2) - pphi * (P.b_n * s + 0.25 * P.b_z * s * s) +
                0.5 * P.b_n * P.b_z * eta2 * xi2 * s + P.b_z * P.b_z * eta2 * xi2 * s * s / 16.0 +
                P.b_n * P.b_n * eta2 * xi2 + P.u1 * (eta2 * eta2 + xi2 * xi2) / (2.0 * eta2 * xi2) +
                P.u3 * (xi2 * xi2 - eta2 * eta2) / (2.0 * eta2 * xi2);
       })},
  };
  m.commuting_pairs = {{"X1", "X2tilde"}, {"Y3", "X2tilde"}};
  return m;
}

// ---------------------------------------------------------------------------

/// Re-express a curvilinear model in Cartesian coordinates by composing every
/// function with the canonical point transformation.
inline SystemModel cartesian_form(const SystemModel& m) {
  if (m.chart.kind == ChartKind::Cartesian) return m;
  const Chart c = m.chart;
  auto pull_phase = [c](const PhaseScalar& f) {
    return PhaseScalar([c, f](const auto& z) { return f(phase_from_cartesian(c, z)); });
  };
  SystemModel out = m;
  out.chart = Chart::cartesian();
  out.hamiltonian = pull_phase(m.hamiltonian);
  for (auto& i : out.integrals) i.fn = pull_phase(i.fn);
  ConfigScalar w = m.potential;
  out.potential = ConfigScalar([c, w](const auto& x) { return w(chart_from_cartesian(c, x)); });
  VectorPotential a = m.vector_potential;
  MagneticField b = m.field;
  for (std::size_t k = 0; k < 3; ++k) {
    out.vector_potential.comp[k] = ConfigScalar([c, a, k](const auto& x) {
      auto q = chart_from_cartesian(c, x);
      return oneform_to_cartesian(c, q, a(q))[k];
    });
    out.field.comp[k] = ConfigScalar([c, b, k](const auto& x) {
      auto q = chart_from_cartesian(c, x);
      return twoform_to_cartesian(c, q, b(q))[k];
    });
  }
  out.vector_potential.chart = out.field.chart = out.chart;
  return out;
}

}  // namespace magsi
