#pragma once

// Hamiltonian flows in Cartesian coordinates, conservation drift, and orbit
// closure detection.
//
// The integrator is the Dormand-Prince 5(4) pair with FSAL and the
// continuous extension of Hairer, Norsett and Wanner (Solving ODEs I, II.6).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "json.hpp"
#include "magsi/catalog.hpp"
#include "magsi/dual.hpp"
#include "magsi/errors.hpp"
#include "magsi/fields.hpp"
#include "magsi/geometry.hpp"

namespace magsi {

enum class FlowStatus { Completed, AxisAbort, StepFailure, Unbounded };

inline const char* status_name(FlowStatus s) {
  switch (s) {
    case FlowStatus::Completed: return "Completed";
    case FlowStatus::AxisAbort: return "AxisAbort";
    case FlowStatus::StepFailure: return "StepFailure";
    case FlowStatus::Unbounded: return "Unbounded";
  }
  return "?";
}

struct FlowOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  double axis_margin = kAxisMargin;
  /// Trajectories leaving the ball |x| < escape_radius are stopped as Unbounded.
  double escape_radius = 1e3;
  std::int64_t max_steps = 5'000'000;
  int max_consecutive_rejects = 60;
};

/// One accepted step with its continuous extension.
struct DenseSegment {
  double t0 = 0.0;
  double h = 0.0;
  std::array<Vec6, 5> rcont{};

  double t1() const { return t0 + h; }

  template <class T>
  std::array<T, 6> eval_at(const T& theta) const {
    T th1 = 1.0 - theta;
    std::array<T, 6> y;
    for (std::size_t i = 0; i < 6; ++i)
      y[i] = rcont[0][i] + theta * (rcont[1][i] + th1 * (rcont[2][i] + theta * (rcont[3][i] + th1 * rcont[4][i])));
    return y;
  }

  Vec6 state(double t) const { return eval_at((t - t0) / h); }

  /// d/dt of the interpolant.
  Vec6 rate(double t) const {
    auto y = eval_at(D1((t - t0) / h, 1.0));
    Vec6 v;
    for (std::size_t i = 0; i < 6; ++i) v[i] = y[i].d / h;
    return v;
  }
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Vec6> states;  // Cartesian (x, y, z, px, py, pz)
  std::vector<DenseSegment> dense;
  std::map<std::string, double> integral_drift;
  FlowStatus status = FlowStatus::Completed;
  std::string message;
  std::int64_t rejected_steps = 0;

  double last_time() const { return times.empty() ? 0.0 : times.back(); }
  std::size_t steps() const { return dense.size(); }

  /// Dense-output state at t in [times.front(), times.back()].
  Vec6 at(double t) const {
    if (dense.empty()) return states.front();
    auto it = std::upper_bound(times.begin(), times.end(), t);
    std::size_t k = it == times.begin() ? 0 : static_cast<std::size_t>(it - times.begin()) - 1;
    k = std::min(k, dense.size() - 1);
    return dense[k].state(t);
  }
};

/// Hamilton's equations of a Cartesian model: (dH/dp, -dH/dq).
inline Vec6 hamiltonian_vector_field(const SystemModel& cart, const Vec6& z) {
  auto g = gradient_at(cart.hamiltonian, z);
  return {g[3], g[4], g[5], -g[0], -g[1], -g[2]};
}

namespace detail {

struct Dopri5 {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                          a76 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;
  static constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                          d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                          d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;
};

inline Vec6 axpy(const Vec6& y, double h, std::initializer_list<std::pair<double, const Vec6*>> terms) {
  Vec6 out = y;
  for (auto [c, k] : terms)
    for (std::size_t i = 0; i < 6; ++i) out[i] += h * c * (*k)[i];
  return out;
}

inline bool all_finite(const Vec6& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

inline double rms_scaled(const Vec6& v, const Vec6& y0, const Vec6& y1, double rtol, double atol) {
  double s = 0.0;
  for (std::size_t i = 0; i < 6; ++i) {
    double sc = atol + rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    s += (v[i] / sc) * (v[i] / sc);
  }
  return std::sqrt(s / 6.0);
}

}  // namespace detail

/// Integrate Hamilton's equations of `sys` (any chart) from z0 over [0, t_end]
/// in Cartesian coordinates.
inline Trajectory hamiltonian_flow(const SystemModel& sys, const PhasePoint& z0, double t_end,
                                   const FlowOptions& opt = {}) {
  if (!(t_end > 0.0)) throw Error("hamiltonian_flow: t_end must be positive");
  const SystemModel cart = cartesian_form(sys);
  PhasePoint start = push_phase(z0, Chart::cartesian());
  using DP = detail::Dopri5;

  Trajectory tr;
  Vec6 y = start.z();
  tr.times.push_back(0.0);
  tr.states.push_back(y);

  auto near_axis = [&](const Vec6& z) { return sys.axis_singular && std::hypot(z[0], z[1]) <= opt.axis_margin; };
  auto fail = [&](FlowStatus s, std::string msg) {
    tr.status = s;
    tr.message = std::move(msg);
    return tr;
  };
  if (near_axis(y)) return fail(FlowStatus::AxisAbort, "initial point on the z-axis");

  auto rhs = [&](const Vec6& z) { return hamiltonian_vector_field(cart, z); };
  Vec6 k1 = rhs(y);
  if (!detail::all_finite(k1)) return fail(FlowStatus::StepFailure, "non-finite vector field at the initial point");

  // initial step (Hairer's heuristic)
  double h;
  {
    Vec6 zero{};
    double d0 = detail::rms_scaled(y, y, zero, opt.rtol, opt.atol);
    double d1 = detail::rms_scaled(k1, y, zero, opt.rtol, opt.atol);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    Vec6 y1 = detail::axpy(y, h0, {{1.0, &k1}});
    Vec6 f1 = rhs(y1);
    Vec6 df;
    for (std::size_t i = 0; i < 6; ++i) df[i] = f1[i] - k1[i];
    double d2 = detail::all_finite(f1) ? detail::rms_scaled(df, y, zero, opt.rtol, opt.atol) / h0 : 0.0;
    double m = std::max(d1, d2);
    double h1 = m <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / m, 0.2);
    h = std::min({100.0 * h0, h1, t_end});
  }

  double t = 0.0;
  int rejects = 0;
  double err_old = 1e-4;
  while (t < t_end) {
    if (static_cast<std::int64_t>(tr.dense.size()) >= opt.max_steps)
      return fail(FlowStatus::StepFailure, "maximum number of steps reached");
    bool last = false;
    if (t + h >= t_end) {
      h = t_end - t;
      last = true;
    }
    Vec6 k2 = rhs(detail::axpy(y, h, {{DP::a21, &k1}}));
    Vec6 k3 = rhs(detail::axpy(y, h, {{DP::a31, &k1}, {DP::a32, &k2}}));
    Vec6 k4 = rhs(detail::axpy(y, h, {{DP::a41, &k1}, {DP::a42, &k2}, {DP::a43, &k3}}));
    Vec6 k5 = rhs(detail::axpy(y, h, {{DP::a51, &k1}, {DP::a52, &k2}, {DP::a53, &k3}, {DP::a54, &k4}}));
    Vec6 k6 = rhs(detail::axpy(y, h, {{DP::a61, &k1}, {DP::a62, &k2}, {DP::a63, &k3}, {DP::a64, &k4}, {DP::a65, &k5}}));
    Vec6 y1 = detail::axpy(y, h, {{DP::a71, &k1}, {DP::a73, &k3}, {DP::a74, &k4}, {DP::a75, &k5}, {DP::a76, &k6}});
    Vec6 k7 = rhs(y1);

    double err = std::numeric_limits<double>::infinity();
    bool finite = detail::all_finite(y1) && detail::all_finite(k7) && detail::all_finite(k2) &&
                  detail::all_finite(k3) && detail::all_finite(k4) && detail::all_finite(k5) &&
                  detail::all_finite(k6);
    if (finite) {
      Vec6 e;
      for (std::size_t i = 0; i < 6; ++i)
        e[i] = h * (DP::e1 * k1[i] + DP::e3 * k3[i] + DP::e4 * k4[i] + DP::e5 * k5[i] + DP::e6 * k6[i] +
                    DP::e7 * k7[i]);
      err = detail::rms_scaled(e, y, y1, opt.rtol, opt.atol);
    }

    if (err <= 1.0) {
      DenseSegment seg;
      seg.t0 = t;
      seg.h = h;
      for (std::size_t i = 0; i < 6; ++i) {
        double ydiff = y1[i] - y[i];
        double bspl = h * k1[i] - ydiff;
        seg.rcont[0][i] = y[i];
        seg.rcont[1][i] = ydiff;
        seg.rcont[2][i] = bspl;
        seg.rcont[3][i] = ydiff - h * k7[i] - bspl;
        seg.rcont[4][i] = h * (DP::d1 * k1[i] + DP::d3 * k3[i] + DP::d4 * k4[i] + DP::d5 * k5[i] +
                               DP::d6 * k6[i] + DP::d7 * k7[i]);
      }
      t = last ? t_end : t + h;
      y = y1;
      k1 = k7;
      tr.dense.push_back(seg);
      tr.times.push_back(t);
      tr.states.push_back(y);
      rejects = 0;

      if (near_axis(y)) return fail(FlowStatus::AxisAbort, "trajectory entered the axis tube at t=" + std::to_string(t));
      if (std::sqrt(y[0] * y[0] + y[1] * y[1] + y[2] * y[2]) > opt.escape_radius)
        return fail(FlowStatus::Unbounded, "trajectory left the escape radius at t=" + std::to_string(t));

      // PI step-size control
      double e = std::max(err, 1e-10);
      double fac = 0.9 * std::pow(e, -0.7 / 5.0) * std::pow(err_old, 0.4 / 5.0);
      err_old = e;
      h *= std::clamp(fac, 0.2, 10.0);
    } else {
      ++tr.rejected_steps;
      if (++rejects > opt.max_consecutive_rejects || h < 1e-14 * std::max(1.0, std::abs(t))) {
        if (sys.axis_singular && std::hypot(y[0], y[1]) < 1e-3)
          return fail(FlowStatus::AxisAbort, "step failure next to the z-axis at t=" + std::to_string(t));
        return fail(FlowStatus::StepFailure, "repeated step rejection at t=" + std::to_string(t));
      }
      double fac = std::isfinite(err) ? 0.9 * std::pow(err, -0.2) : 0.1;
      h *= std::clamp(fac, 0.1, 0.9);
    }
  }
  return tr;
}

// ---------------------------------------------------------------------------

/// max_t |F(z(t)) - F(z(0))| / (1 + |F(z(0))|) for H and every integral of sys.
inline std::map<std::string, double> drift_report(const Trajectory& tr, const SystemModel& sys) {
  const SystemModel cart = cartesian_form(sys);
  std::map<std::string, double> out;
  if (tr.states.empty()) return out;
  for (const auto& f : cart.all_functions()) {
    double f0 = f.fn(tr.states.front());
    double m = 0.0;
    for (const auto& z : tr.states) {
      double v = f.fn(z);
      double d = std::abs(v - f0) / (1.0 + std::abs(f0));
      if (!std::isfinite(d)) d = std::numeric_limits<double>::infinity();
      m = std::max(m, d);
    }
    out[f.name] = m;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Closure detection

struct ClosureResult {
  bool closed = false;
  double period_estimate = 0.0;
  double closure_distance = std::numeric_limits<double>::infinity();
  std::vector<double> recurrence_times;  // local minima of |z(t) - z0| below tol
  FlowStatus status = FlowStatus::Completed;
  std::string message;
  std::size_t steps = 0;
};

inline double phase_distance(const Vec6& a, const Vec6& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < 6; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

/// Local minima of |z(t) - z0| over a computed trajectory, as (time, distance).
/// Minima earlier than the end of the tenth step are skipped.
inline std::vector<std::pair<double, double>> distance_minima(const Trajectory& tr) {
  std::vector<std::pair<double, double>> out;
  if (tr.dense.size() < 11) return out;
  const Vec6 z0 = tr.states.front();
  const double t_guard = tr.times[10];
  auto slope = [&](const DenseSegment& s, double t) {
    Vec6 z = s.state(t), v = s.rate(t);
    double g = 0.0;
    for (std::size_t i = 0; i < 6; ++i) g += (z[i] - z0[i]) * v[i];
    return g;
  };
  constexpr int kSub = 8;
  for (std::size_t k = 10; k < tr.dense.size(); ++k) {
    const auto& s = tr.dense[k];
    double ta = s.t0;
    double ga = slope(s, ta);
    for (int j = 1; j <= kSub; ++j) {
      double tb = s.t0 + s.h * j / kSub;
      double gb = slope(s, tb);
      if (ga < 0.0 && gb >= 0.0 && ta >= t_guard) {
        auto tolf = [](double a, double b) { return std::abs(b - a) <= 1e-15 * std::max(1.0, std::abs(a)); };
        std::uintmax_t iters = 100;
        auto [lo, hi] = boost::math::tools::toms748_solve([&](double tt) { return slope(s, tt); }, ta, tb, ga, gb,
                                                          tolf, iters);
        double tm = 0.5 * (lo + hi);
        out.emplace_back(tm, phase_distance(s.state(tm), z0));
      }
      ta = tb;
      ga = gb;
    }
  }
  return out;
}

inline ClosureResult closure_from_trajectory(const Trajectory& tr, double tol) {
  ClosureResult r;
  r.status = tr.status;
  r.message = tr.message;
  r.steps = tr.steps();
  if (tr.status != FlowStatus::Completed) return r;
  for (auto [t, d] : distance_minima(tr)) {
    if (d < tol) r.recurrence_times.push_back(t);
    if (!r.closed && d < tol) {
      r.closed = true;
      r.period_estimate = t;
      r.closure_distance = d;
    }
    if (!r.closed) r.closure_distance = std::min(r.closure_distance, d);
  }
  return r;
}

inline ClosureResult detect_closure(const SystemModel& sys, const PhasePoint& z0, double t_max = 200.0,
                                    double tol = 1e-3, const FlowOptions& opt = {}) {
  return closure_from_trajectory(hamiltonian_flow(sys, z0, t_max, opt), tol);
}

// ---------------------------------------------------------------------------
// Export

inline void write_csv(std::ostream& os, const Trajectory& tr) {
  os << "t,x,y,z,px,py,pz\n";
  os.precision(17);
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    os << tr.times[k];
    for (double v : tr.states[k]) os << ',' << v;
    os << '\n';
  }
}

inline nlohmann::json trajectory_json(const Trajectory& tr, bool include_states = true) {
  nlohmann::json j;
  j["status"] = status_name(tr.status);
  if (!tr.message.empty()) j["message"] = tr.message;
  j["t_end"] = tr.last_time();
  j["steps"] = tr.steps();
  j["rejected_steps"] = tr.rejected_steps;
  j["drift"] = tr.integral_drift;
  if (include_states) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
      nlohmann::json row = nlohmann::json::array({tr.times[k]});
      for (double v : tr.states[k]) row.push_back(v);
      rows.push_back(row);
    }
    j["columns"] = {"t", "x", "y", "z", "px", "py", "pz"};
    j["states"] = rows;
  }
  return j;
}

inline nlohmann::json to_json(const ClosureResult& c) {
  nlohmann::json j = {{"closed", c.closed},
                      {"period_estimate", c.period_estimate},
                      {"recurrence_times", c.recurrence_times},
                      {"status", status_name(c.status)},
                      {"steps", c.steps}};
  j["closure_distance"] = std::isfinite(c.closure_distance) ? nlohmann::json(c.closure_distance) : nlohmann::json();
  if (!c.message.empty()) j["message"] = c.message;
  return j;
}

/// Gnuplot script drawing the trajectory in 3D, colored red to blue by time,
/// with a green circle at the closure point when there is one.
inline void write_gnuplot(std::ostream& os, const std::string& csv_path, const Trajectory& tr,
                          const ClosureResult* closure = nullptr) {
  os << "set datafile separator ','\n"
     << "set xlabel 'x'\nset ylabel 'y'\nset zlabel 'z'\n"
     << "set palette defined (0 'red', 1 'blue')\n"
     << "set cblabel 't'\n"
     << "set view equal xyz\n";
  if (closure && closure->closed) {
    Vec6 p = tr.at(closure->period_estimate);
    os.precision(12);
    os << "set label 1 at " << p[0] << ',' << p[1] << ',' << p[2]
       << " point pointtype 6 pointsize 2 linecolor rgb 'green' front\n";
  }
  os << "splot '" << csv_path << "' every ::1 using 2:3:4:1 with lines linecolor palette notitle\n";
}

}  // namespace magsi
