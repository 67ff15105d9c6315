#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "magsi/catalog.hpp"
#include "magsi/dual.hpp"
#include "magsi/errors.hpp"
#include "magsi/fields.hpp"
#include "magsi/geometry.hpp"

namespace magsi {

// ---------------------------------------------------------------------------
// Sampling

/// Verification box: xi, eta in [lo, hi], phi in (-pi, pi), momenta in [-p_max, p_max].
/// Cartesian systems are sampled at the Cartesian images of circular parabolic
/// box points.
struct SampleBox {
  double lo = 0.3;
  double hi = 2.5;
  double p_max = 2.0;
};

class Sampler {
 public:
  Sampler(Chart chart, std::uint64_t seed, SampleBox box = {}) : chart_(chart), rng_(seed), box_(box) {}

  Vec3 position() {
    std::uniform_real_distribution<double> u(box_.lo, box_.hi);
    std::uniform_real_distribution<double> ph(-std::numbers::pi, std::numbers::pi);
    Vec3 q{u(rng_), u(rng_), ph(rng_)};
    if (chart_.kind == ChartKind::Cartesian) return to_cartesian(Chart::circular_parabolic(), q);
    return q;
  }

  Vec6 phase() {
    Vec3 q = position();
    std::uniform_real_distribution<double> up(-box_.p_max, box_.p_max);
    return {q[0], q[1], q[2], up(rng_), up(rng_), up(rng_)};
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  Chart chart_;
  std::mt19937_64 rng_;
  SampleBox box_;
};

/// Random polynomial ProfileSet: each of f, g, alpha, beta has degree <= max_degree
/// with coefficients uniform in [-1, 1].
inline ProfileSet random_polynomial_profiles(std::mt19937_64& rng, ProfileArgument arg, int max_degree = 4) {
  std::uniform_real_distribution<double> c(-1.0, 1.0);
  auto poly = [&] {
    std::vector<double> k(static_cast<std::size_t>(max_degree) + 1);
    for (auto& v : k) v = c(rng);
    return Expr::polynomial(k);
  };
  Expr f = poly(), g = poly(), a = poly(), b = poly();
  return {f, g, a, b, arg};
}

// ---------------------------------------------------------------------------
// Brackets

/// {F, G} at z, generic in the scalar type of z (double or D1).
template <class T>
T poisson_bracket_at(const PhaseScalar& f, const PhaseScalar& g, const std::array<T, 6>& z) {
  auto df = gradient_at(f, z);
  auto dg = gradient_at(g, z);
  T s = 0.0;
  for (std::size_t i = 0; i < 3; ++i) s = s + df[i] * dg[i + 3] - dg[i] * df[i + 3];
  return s;
}

inline double poisson_bracket(const PhaseScalar& f, const PhaseScalar& g, const Vec6& z) {
  double v = poisson_bracket_at(f, g, z);
  if (!std::isfinite(v)) throw NonFinite("Poisson bracket is not finite");
  return v;
}

inline double poisson_bracket(const PhaseScalar& f, const PhaseScalar& g, const PhasePoint& z) {
  return poisson_bracket(f, g, z.z());
}

/// {F, G} as a phase function. It has first but not second derivatives.
inline PhaseScalar bracket(const PhaseScalar& f, const PhaseScalar& g) {
  return PhaseScalar::first_order([f, g](const auto& z) { return poisson_bracket_at(f, g, z); });
}

/// |{F,G}| / (1 + |F||G|).
inline double normalized_bracket(const PhaseScalar& f, const PhaseScalar& g, const Vec6& z) {
  return std::abs(poisson_bracket(f, g, z)) / (1.0 + std::abs(f(z)) * std::abs(g(z)));
}

struct PairResult {
  std::string first, second;
  double max_residual = 0.0;
  Vec6 worst_point{};
};

struct BracketReport {
  std::string system;
  std::vector<PairResult> pairs;
  int points_sampled = 0;
  double tolerance = 0.0;
  std::uint64_t seed = 0;
  bool pass = true;

  double max_residual() const {
    double m = 0.0;
    for (const auto& p : pairs) m = std::max(m, p.max_residual);
    return m;
  }
};

/// Pairs checked by check_commutation: every integral with H, then the
/// declared commuting pairs.
inline std::vector<std::pair<std::string, std::string>> commutation_pairs(const SystemModel& m) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& i : m.integrals) out.emplace_back(i.name, "H");
  for (const auto& p : m.commuting_pairs) out.push_back(p);
  return out;
}

inline BracketReport check_commutation(const SystemModel& m, int n, double tol, std::uint64_t seed) {
  if (n < 1) throw Error("check_commutation: n must be at least 1");
  BracketReport r;
  r.system = m.family;
  r.points_sampled = n;
  r.tolerance = tol;
  r.seed = seed;
  auto names = commutation_pairs(m);
  for (const auto& [a, b] : names) r.pairs.push_back({a, b, 0.0, {}});

  Sampler s(m.chart, seed);
  for (int k = 0; k < n; ++k) {
    Vec6 z = s.phase();
    for (std::size_t i = 0; i < names.size(); ++i) {
      double v = normalized_bracket(m.integral(names[i].first), m.integral(names[i].second), z);
      if (!std::isfinite(v)) v = std::numeric_limits<double>::infinity();
      if (v > r.pairs[i].max_residual || k == 0) {
        r.pairs[i].max_residual = v;
        r.pairs[i].worst_point = z;
      }
    }
  }
  for (const auto& p : r.pairs)
    if (!(p.max_residual < tol)) r.pass = false;
  return r;
}

// ---------------------------------------------------------------------------
// Determining equations of the circular parabolic ansatz

struct EquationResidual {
  std::string bracket;      // "{X1,H}", "{X2,H}", "{X1,X2}"
  std::string coefficient;  // monomial label, e.g. "p_xi^2", "p_phi", "1"
  std::string tag;          // "remains1" / "remains2" for the c1-dependent leftovers
  double residual = 0.0;    // |sum| / (1 + sum |terms|)
  double raw = 0.0;         // sum of terms
};

namespace detail {

/// Every function appearing in the determining equations, evaluated at q.
template <class T>
struct AnsatzFields {
  T s1[3], s2[3], b[3], w, m1, m2;
};

template <class T>
AnsatzFields<T> ansatz_fields(const ParabolicFamily& fam, double c1, const std::array<T, 3>& q) {
  auto t = fam.terms(q[0], q[1]);
  AnsatzFields<T> a;
  a.s1[0] = c1 * q[0] / t.s;
  a.s1[1] = -c1 * q[1] / t.s;
  a.s1[2] = (t.f - t.g) / t.s;
  a.s2[0] = T(0.0);
  a.s2[1] = T(0.0);
  a.s2[2] = 2.0 * (t.xi2 * t.f + t.eta2 * t.g) / t.s;
  auto bb = fam.field(q);
  for (int i = 0; i < 3; ++i) a.b[i] = bb[i];
  a.w = fam.potential(q);
  a.m1 = (t.xi2 * t.xi2 * t.alpha + t.eta2 * t.eta2 * t.beta) / (t.eta2 * t.xi2 * t.s);
  a.m2 = sqr((t.xi2 * t.f + t.eta2 * t.g) / t.s);
  return a;
}

}  // namespace detail

/// Residuals of the second-, first- and zeroth-order determining equations
/// obtained from {X1,H} = {X2,H} = {X1,X2} = 0 in circular parabolic
/// coordinates, with the solved coefficient functions, field, W, m1, m2
/// substituted. c1 is the free constant of the first-order coefficients of X1.
inline std::vector<EquationResidual> determining_residuals(const ProfileSet& profiles, const Vec3& q,
                                                           double c1 = 0.0) {
  require_interior(Chart::circular_parabolic(), q);
  ProfileSet pr = profiles;
  pr.argument = ProfileArgument::Squared;
  detail::ParabolicFamily fam{pr};

  // value and the three partial derivatives of every ansatz function
  auto v = detail::ansatz_fields(fam, c1, q);
  std::array<detail::AnsatzFields<double>, 3> d;
  for (std::size_t k = 0; k < 3; ++k) {
    auto dk = detail::ansatz_fields(fam, c1, seed(q, k));
    for (int i = 0; i < 3; ++i) {
      d[k].s1[i] = dk.s1[i].d;
      d[k].s2[i] = dk.s2[i].d;
      d[k].b[i] = dk.b[i].d;
    }
    d[k].w = dk.w.d;
    d[k].m1 = dk.m1.d;
    d[k].m2 = dk.m2.d;
  }
  const int XI = 0, ETA = 1, PHI = 2;
  const double xi = q[0], eta = q[1];
  const double xi2 = xi * xi, eta2 = eta * eta, S = xi2 + eta2, S3 = S * S * S;
  const double f = pr.f(eta2), g = pr.g(xi2), fp = pr.f.derivative(eta2), gp = pr.g.derivative(xi2);
  const auto& s1 = v.s1;
  const auto& s2 = v.s2;
  const auto& B = v.b;
  auto ds1 = [&](int k, int i) { return d[k].s1[i]; };
  auto ds2 = [&](int k, int i) { return d[k].s2[i]; };
  auto dW = [&](int k) { return d[k].w; };
  auto dm1 = [&](int k) { return d[k].m1; };
  auto dm2 = [&](int k) { return d[k].m2; };
  const double F2 = xi2 * f + eta2 * g;
  const double K = S * (fp - gp) - 2.0 * f + 2.0 * g;

  struct Row {
    const char* bracket;
    const char* coefficient;
    const char* tag;
    std::vector<double> terms;
  };
  std::vector<Row> rows = {
      // {X1,H}, second order
      {"{X1,H}", "p_xi^2", "", {xi * s1[XI], eta * s1[ETA], S * ds1(XI, XI)}},
      {"{X1,H}", "p_eta^2", "", {xi * s1[XI], eta * s1[ETA], S * ds1(ETA, ETA)}},
      {"{X1,H}", "p_phi^2", "", {eta * s1[XI], xi * s1[ETA], xi * eta * ds1(PHI, PHI)}},
      {"{X1,H}", "p_xi p_eta", "", {B[PHI], -ds1(ETA, XI), -ds1(XI, ETA)}},
      {"{X1,H}", "p_xi p_phi", "", {B[ETA] * xi2, S * ds1(PHI, XI), xi2 * eta2 * ds1(XI, PHI)}},
      {"{X1,H}", "p_eta p_phi", "", {B[XI] * eta2, S * ds1(PHI, ETA), xi2 * eta2 * ds1(ETA, PHI)}},
      // {X2,H}, second order
      {"{X2,H}", "p_xi^2", "", {S * ds2(XI, XI), eta * s2[ETA], xi * s2[XI]}},
      {"{X2,H}", "p_eta^2", "", {S * ds2(ETA, ETA), eta * s2[ETA], xi * s2[XI]}},
      {"{X2,H}", "p_phi^2", "", {xi * s2[ETA], eta * s2[XI], eta * xi * ds2(PHI, PHI)}},
      {"{X2,H}", "p_xi p_eta", "", {ds2(XI, ETA), ds2(ETA, XI)}},
      {"{X2,H}", "p_xi p_phi", "", {2.0 * eta2 * xi2 * B[ETA], -S * ds2(PHI, XI), -eta2 * xi2 * ds2(XI, PHI)}},
      {"{X2,H}", "p_eta p_phi", "", {2.0 * eta2 * xi2 * B[XI], S * ds2(PHI, ETA), eta2 * xi2 * ds2(ETA, PHI)}},
      // {X1,X2}, second order
      {"{X1,X2}", "p_xi^2", "", {s2[ETA]}},
      {"{X1,X2}", "p_eta^2", "", {s2[XI]}},
      {"{X1,X2}", "p_phi^2", "", {xi * 2.0 * eta * xi * s1[ETA], xi * 2.0 * eta2 * s1[XI], xi * s2[XI], -eta * s2[ETA]}},
      {"{X1,X2}", "p_xi p_eta", "", {ds2(XI, ETA)}},
      {"{X1,X2}", "p_xi p_phi", "", {2.0 * eta2 * ds1(XI, PHI), ds2(XI, PHI)}},
      {"{X1,X2}", "p_eta p_phi", "", {2.0 * xi2 * ds1(ETA, PHI), -ds2(ETA, PHI)}},
      // {X1,H}, first and zeroth order
      {"{X1,H}", "p_xi", "", {2.0 * eta2 * xi * (f - g) * (f - g + S * gp), S3 * eta2 * dW(XI), -S3 * dm1(XI)}},
      {"{X1,H}", "p_eta", "", {2.0 * eta * xi2 * (f - g) * (S * fp - f + g), -S3 * dm1(ETA), -S3 * xi2 * dW(ETA)}},
      {"{X1,H}", "p_phi", "", {-2.0 * c1 * eta2 * xi2 * K, S3 * dm1(PHI), S3 * (xi2 - eta2) * dW(PHI)}},
      {"{X1,H}", "1", "remains2", {c1 * xi * dW(XI), -c1 * eta * dW(ETA), -(g - f) * dW(PHI)}},
      // {X2,H}, first and zeroth order
      {"{X2,H}", "p_xi", "", {4.0 * eta2 * xi * F2 * (f + S * gp - g), -S3 * dm2(XI)}},
      {"{X2,H}", "p_eta", "", {4.0 * eta * xi2 * F2 * (S * fp - f + g), -S3 * dm2(ETA)}},
      {"{X2,H}", "p_phi", "", {dm2(PHI), -2.0 * eta2 * xi2 * dW(PHI)}},
      {"{X2,H}", "1", "", {F2 * dW(PHI)}},
      // {X1,X2}, first and zeroth order
      {"{X1,X2}", "p_phi", "remains1", {c1 * S * (fp - gp), -c1 * 2.0 * f, c1 * 2.0 * g}},
      {"{X1,X2}", "1", "", {2.0 * c1 * eta2 * xi2 * F2 * K, -S3 * (xi2 * xi2 * f - eta2 * eta2 * g) * dW(PHI)}},
  };

  std::vector<EquationResidual> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    double sum = 0.0, scale = 0.0;
    for (double t : r.terms) {
      sum += t;
      scale += std::abs(t);
    }
    if (!std::isfinite(sum)) throw NonFinite(std::string("determining equation ") + r.bracket + " " + r.coefficient);
    out.push_back({r.bracket, r.coefficient, r.tag, std::abs(sum) / (1.0 + scale), sum});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Functional independence

struct IndependenceReport {
  std::vector<std::string> names;
  int rank = 0;
  double smallest_retained_singular_value = 0.0;
  std::vector<Vec6> points;
  std::vector<int> rank_per_point;
};

/// Rank of the Jacobian d(F_1..F_k)/d(q,p), by singular values above
/// 1e-10 * sigma_max, maximized over the points.
inline IndependenceReport functional_independence(const std::vector<NamedIntegral>& fns,
                                                  const std::vector<Vec6>& points) {
  if (points.empty()) throw Error("functional_independence needs at least one point");
  IndependenceReport r;
  for (const auto& f : fns) r.names.push_back(f.name);
  r.points = points;
  for (const auto& z : points) {
    Eigen::MatrixXd jac(static_cast<Eigen::Index>(fns.size()), 6);
    for (std::size_t i = 0; i < fns.size(); ++i) {
      auto gr = gradient(fns[i].fn, z);
      for (int j = 0; j < 6; ++j) jac(static_cast<Eigen::Index>(i), j) = gr[static_cast<std::size_t>(j)];
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac);
    const auto& sv = svd.singularValues();
    int rank = 0;
    double smallest = 0.0;
    if (sv.size() > 0 && sv(0) > 0.0) {
      double cut = 1e-10 * sv(0);
      for (Eigen::Index k = 0; k < sv.size(); ++k)
        if (sv(k) > cut) {
          ++rank;
          smallest = sv(k);
        }
    }
    r.rank_per_point.push_back(rank);
    if (rank > r.rank) {
      r.rank = rank;
      r.smallest_retained_singular_value = smallest;
    }
  }
  return r;
}

inline IndependenceReport functional_independence(const SystemModel& m, int n_points, std::uint64_t seed) {
  Sampler s(m.chart, seed);
  std::vector<Vec6> pts;
  for (int i = 0; i < n_points; ++i) pts.push_back(s.phase());
  return functional_independence(m.all_functions(), pts);
}

// ---------------------------------------------------------------------------
// Polynomial closure of the L^2 system

/// The polynomial in (H, X1, X2tilde, Y3) that equals {X1,Y3}^2.
inline double closure_polynomial(const L2Params& P, double h, double x1, double x2, double y3) {
  const double bz = P.b_z, bm = P.b_m, bn = P.b_n, u1 = P.u1, u2 = P.u2, u3 = P.u3;
  const double x22 = x2 * x2, x23 = x22 * x2, x24 = x22 * x22;
  return -8.0 * x22 * y3 * h + 8.0 * y3 * y3 * h - 4.0 * x1 * x1 * y3 + 4.0 * bz * x23 * y3 -
         4.0 * bz * x2 * y3 * y3 + 4.0 * bn * bn * x22 * y3 + 8.0 * (bm * bm + 2.0 * u1) * h * y3 +
         8.0 * bn * bm * y3 * x1 - 8.0 * bn * bm * x22 * x1 - 4.0 * bn * bn * x24 -
         4.0 * (bm * bm + 2.0 * u1) * x1 * x1 - 16.0 * u1 * x22 * h - 16.0 * bm * u3 * x2 * h -
         8.0 * (bm * u2 - bn * u3) * x2 * x1 + 8.0 * (bz * u1 - bn * u2) * x23 +
         4.0 * (2.0 * bn * u2 - bm * bm * bz - 2.0 * bz * u1) * x2 * y3 + 8.0 * u3 * u3 * h +
         8.0 * (bm * bm * bm * bn + 2.0 * bm * bn * u1 + u2 * u3) * x1 +
         4.0 * (2.0 * bm * bm * bn * bn - u2 * u2 + 2.0 * bm * bz * u3) * x22 -
         4.0 * (bm * bm * bn * bn - u2 * u2) * y3 +
         4.0 * (2.0 * bm * bm * bn * u2 - 2.0 * bm * bn * bn * u3 - bz * u3 * u3) * x2 -
         4.0 * bm * bn * (bm * bm * bm * bn + 2.0 * bm * bn * u1 + 2.0 * u2 * u3);
}

struct ClosureIdentity {
  double lhs = 0.0;  // {X1,Y3}^2
  double rhs = 0.0;  // polynomial
  double residual = 0.0;  // |lhs - rhs| / (1 + |lhs|)
};

inline ClosureIdentity closure_identity(const SystemModel& m, const Vec6& z) {
  if (m.family != "l2") throw Error("closure identity is defined for the Cartesian l2 system, got '" + m.family + "'");
  if (axis_distance(Vec3{z[0], z[1], z[2]}) <= kAxisMargin)
    throw AxisSingularity("closure identity on the z-axis");
  L2Params P = L2Params::from_map(m.params);
  const auto& x1 = m.integral("X1");
  const auto& y3 = m.integral("Y3");
  double br = poisson_bracket(x1, y3, z);
  ClosureIdentity c;
  c.lhs = br * br;
  c.rhs = closure_polynomial(P, m.hamiltonian(z), x1(z), m.integral("X2tilde")(z), y3(z));
  c.residual = std::abs(c.lhs - c.rhs) / (1.0 + std::abs(c.lhs));
  return c;
}

inline double closure_identity_residual(const SystemModel& m, const Vec6& z) { return closure_identity(m, z).residual; }

// ---------------------------------------------------------------------------
// Field checks

struct FieldReport {
  std::string system;
  double max_curl_residual = 0.0;  // |dA - B| / (1 + |B|) in the model's chart
  double max_div_residual = 0.0;   // |div B| / (1 + |B|) in Cartesian
  int points_sampled = 0;
  bool pass = true;
};

inline double norm3(const Vec3& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

inline FieldReport check_fields(const SystemModel& m, int n, double tol, std::uint64_t seed) {
  FieldReport r;
  r.system = m.family;
  r.points_sampled = n;
  SystemModel cart = cartesian_form(m);
  Sampler s(m.chart, seed);
  for (int k = 0; k < n; ++k) {
    Vec3 q = s.position();
    Vec3 res = curl_check(m.vector_potential, m.field, q);
    r.max_curl_residual = std::max(r.max_curl_residual, norm3(res) / (1.0 + norm3(m.field(q))));
    Vec3 x = m.chart.kind == ChartKind::Cartesian ? q : to_cartesian(m.chart, q);
    double div = closedness_residual(cart.field, x);
    r.max_div_residual = std::max(r.max_div_residual, std::abs(div) / (1.0 + norm3(cart.field(x))));
  }
  r.pass = r.max_curl_residual < tol && r.max_div_residual < tol;
  return r;
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json to_json(const BracketReport& r) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& p : r.pairs)
    pairs.push_back({{"pair", {p.first, p.second}}, {"max_residual", p.max_residual}, {"worst_point", p.worst_point}});
  return {{"system", r.system}, {"pairs", pairs},   {"points_sampled", r.points_sampled},
          {"tolerance", r.tolerance}, {"seed", r.seed}, {"pass", r.pass}};
}

inline nlohmann::json to_json(const IndependenceReport& r) {
  return {{"integrals", r.names},
          {"rank", r.rank},
          {"smallest_retained_singular_value", r.smallest_retained_singular_value},
          {"rank_per_point", r.rank_per_point}};
}

inline nlohmann::json to_json(const FieldReport& r) {
  return {{"system", r.system},
          {"max_curl_residual", r.max_curl_residual},
          {"max_div_residual", r.max_div_residual},
          {"points_sampled", r.points_sampled},
          {"pass", r.pass}};
}

inline nlohmann::json to_json(const EquationResidual& e) {
  nlohmann::json j = {{"bracket", e.bracket}, {"coefficient", e.coefficient}, {"residual", e.residual}};
  if (!e.tag.empty()) j["tag"] = e.tag;
  return j;
}

}  // namespace magsi
