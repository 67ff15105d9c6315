#include <catch_amalgamated.hpp>

#include <numbers>
#include <sstream>

#include "magsi/dynamics.hpp"
#include "magsi/verify.hpp"
#include "oracles.hpp"

using namespace magsi;
using Catch::Approx;

namespace {

const double pi = std::numbers::pi;

/// Test-only uniform field without the compensating potential: H = |p + A|^2 / 2.
SystemModel pure_field(double b) {
  SystemModel m = named_case2(b);
  m.family = "pure_field";
  m.hamiltonian = PhaseScalar([b](const auto& z) {
    auto vx = z[3] - 0.5 * b * z[1];
    auto vy = z[4] + 0.5 * b * z[0];
    return 0.5 * (vx * vx + vy * vy + z[5] * z[5]);
  });
  m.potential = ConfigScalar([](const auto& x) { return 0.0 * x[0]; });
  m.integrals.clear();
  m.commuting_pairs.clear();
  return m;
}

PhasePoint cart(Vec3 q, Vec3 p) { return {Chart::cartesian(), q, p}; }

}  // namespace

TEST_CASE("free particle moves on a straight line", "[dynamics]") {
  SystemModel free_sys = l2_system({});
  free_sys.axis_singular = false;
  Trajectory tr = hamiltonian_flow(free_sys, cart({0.5, 0.5, 0.3}, {1, 0, 0}), 1.0);
  REQUIRE(tr.status == FlowStatus::Completed);
  CHECK(tr.last_time() == 1.0);
  Vec6 z = tr.states.back();
  CHECK(z[0] == Approx(1.5).epsilon(1e-10));
  CHECK(z[1] == Approx(0.5).epsilon(1e-12));
  CHECK(z[3] == Approx(1.0));
  for (std::size_t k = 1; k < tr.times.size(); ++k) CHECK(tr.times[k] > tr.times[k - 1]);
}

TEST_CASE("constant-field case 1 follows the exact rotating free flow", "[dynamics]") {
  const double b = 1.3;
  SystemModel m = named_case1(b, 0.0);
  Vec6 z0{0.8, -0.3, 0.2, 0.4, 0.1, -0.2};
  Trajectory tr = hamiltonian_flow(m, PhasePoint::from_z(Chart::cartesian(), z0), 20.0);
  REQUIRE(tr.status == FlowStatus::Completed);
  for (std::size_t k = 0; k < tr.times.size(); k += 7)
    CHECK(oracle::max_abs_diff(tr.states[k], oracle::rotating_free_flow(z0, b, tr.times[k])) < 1e-8);
  // dense output between steps
  for (double t : {0.123, 3.3, 9.99, 17.5})
    CHECK(oracle::max_abs_diff(tr.at(t), oracle::rotating_free_flow(z0, b, t)) < 1e-8);
}

TEST_CASE("case 1 orbits with p = 0 close with period 4 pi / |b_z|", "[dynamics]") {
  for (double b : {1.0, -2.0}) {
    ClosureResult c = detect_closure(named_case1(b, 0.0), cart({1.0, 0.0, 0.0}, {0.0, 0.0, 0.0}), 30.0, 1e-3);
    REQUIRE(c.closed);
    CHECK(c.period_estimate == Approx(4.0 * pi / std::abs(b)).epsilon(1e-6));
    CHECK(c.closure_distance < 1e-3);
  }
}

TEST_CASE("case 1 Larmor-velocity data does not close", "[dynamics]") {
  // kinetic velocity (0, 1, 0) at x = (1, 0, 0) with b = 1 means p = (0, 1/2, 0)
  ClosureResult c = detect_closure(named_case1(1.0, 0.0), cart({1.0, 0.0, 0.0}, {0.0, 0.5, 0.0}), 200.0, 1e-3);
  CHECK(c.status == FlowStatus::Completed);
  CHECK_FALSE(c.closed);
  CHECK(c.closure_distance > 1.0);
}

TEST_CASE("pure uniform field: Larmor circle and period 2 pi / |b|", "[dynamics]") {
  const double b = 1.5;
  SystemModel m = pure_field(b);
  Vec3 x0{1.0, 0.0, 0.0}, v0{0.0, 0.9, 0.0};
  // p = v - A
  PhasePoint z0 = cart(x0, {v0[0] + 0.5 * b * x0[1], v0[1] - 0.5 * b * x0[0], 0.0});
  Trajectory tr = hamiltonian_flow(m, z0, 10.0 * 2.0 * pi / b);
  REQUIRE(tr.status == FlowStatus::Completed);
  for (std::size_t k = 0; k < tr.times.size(); k += 5) {
    auto xe = oracle::larmor_position(x0, v0, b, tr.times[k]);
    CHECK(oracle::max_abs_diff(Vec3{tr.states[k][0], tr.states[k][1], tr.states[k][2]}, xe) < 1e-8);
  }
  // radius |v| / |b| about the guiding center
  Vec3 center{x0[0] - v0[1] / b, x0[1] + v0[0] / b, 0.0};
  for (const auto& z : tr.states) CHECK(std::hypot(z[0] - center[0], z[1] - center[1]) == Approx(0.9 / b).epsilon(1e-9));
  auto drift = drift_report(tr, m);
  CHECK(drift.at("H") < 1e-9);

  ClosureResult c = closure_from_trajectory(tr, 1e-3);
  REQUIRE(c.closed);
  CHECK(c.period_estimate == Approx(2.0 * pi / b).epsilon(1e-6));
  CHECK(c.recurrence_times.size() >= 9);
}

TEST_CASE("reference orbit: all four integrals conserved", "[dynamics]") {
  SystemModel m = l2_system(reference_params(ReferenceOrbit::WeakMonopole));
  Trajectory tr = hamiltonian_flow(m, reference_initial_point(), 100.0);
  REQUIRE(tr.status == FlowStatus::Completed);
  auto d = drift_report(tr, m);
  REQUIRE(d.size() == 4);
  for (const auto& [name, v] : d) {
    INFO(name << " " << v);
    CHECK(v < 1e-6);
  }
}

TEST_CASE("case 3: the monopole integrals are conserved", "[dynamics]") {
  SystemModel m = named_case3(0.8, -1.0);
  Trajectory tr = hamiltonian_flow(m, cart({1.0, 0.5, 0.3}, {0.1, 0.6, -0.2}), 50.0);
  REQUIRE(tr.status == FlowStatus::Completed);
  auto d = drift_report(tr, m);
  for (const char* name : {"H", "X1", "X2tilde", "Y3", "Y4"}) CHECK(d.at(name) < 1e-7);
}

TEST_CASE("a corrupted integral drifts at order one", "[dynamics]") {
  SystemModel m = named_case1(1.0, 0.5);
  PhaseScalar x1 = m.integrals[0].fn;
  m.integrals[0].fn = PhaseScalar([x1](const auto& z) { return x1(z) + 0.1 * z[0]; });
  Trajectory tr = hamiltonian_flow(m, cart({1.0, 0.0, 0.0}, {0.0, 0.2, 0.3}), 30.0);
  REQUIRE(tr.status == FlowStatus::Completed);
  auto d = drift_report(tr, m);
  CHECK(d.at("X1") > 1e-2);
  CHECK(d.at("H") < 1e-8);
  // the bracket predicts it
  CHECK_FALSE(check_commutation(m, 20, 1e-8, 1).pass);
}

TEST_CASE("curvilinear initial data and models integrate in Cartesian", "[dynamics]") {
  // circular parabolic case 1 profiles against the named system
  SystemModel cp = circular_parabolic_system(case1_parabolic_profiles(0.9, 0.3));
  SystemModel named = named_case1(0.9, 0.3);
  PhasePoint start = push_phase(cart({1.0, 0.4, 0.2}, {0.1, 0.3, 0.2}), Chart::circular_parabolic());
  Trajectory a = hamiltonian_flow(cp, start, 10.0);
  Trajectory b = hamiltonian_flow(named, start, 10.0);
  REQUIRE(a.status == FlowStatus::Completed);
  REQUIRE(b.status == FlowStatus::Completed);
  CHECK(oracle::max_abs_diff(a.states.back(), b.states.back()) < 1e-7);
}

TEST_CASE("time reversal: the backward flow returns to the start", "[dynamics]") {
  // With B != 0 momentum reversal is not a symmetry, so reverse time by
  // integrating the flow of -H.
  SystemModel m = l2_system(reference_params(ReferenceOrbit::NoMonopole));
  SystemModel back = m;
  PhaseScalar h = m.hamiltonian;
  back.hamiltonian = -1.0 * h;
  PhasePoint z0 = reference_initial_point();
  Trajectory fw = hamiltonian_flow(m, z0, 20.0);
  REQUIRE(fw.status == FlowStatus::Completed);
  Trajectory bw = hamiltonian_flow(back, PhasePoint::from_z(Chart::cartesian(), fw.states.back()), 20.0);
  REQUIRE(bw.status == FlowStatus::Completed);
  double tol = 10.0 * std::max(1e-6, drift_report(fw, m).at("H"));
  CHECK(oracle::max_abs_diff(bw.states.back(), z0.z()) < tol);

  // without a magnetic field, reversing momenta is the time reversal
  SystemModel electric = l2_system({0.0, 0.0, 0.0, 0.4, -1.0, 0.2});
  Trajectory e1 = hamiltonian_flow(electric, z0, 15.0);
  Vec6 zr = e1.states.back();
  for (int i = 3; i < 6; ++i) zr[i] = -zr[i];
  Trajectory e2 = hamiltonian_flow(electric, PhasePoint::from_z(Chart::cartesian(), zr), 15.0);
  Vec6 end = e2.states.back();
  for (int i = 3; i < 6; ++i) end[i] = -end[i];
  CHECK(oracle::max_abs_diff(end, z0.z()) < 1e-6);
}

TEST_CASE("energy drift scales with rtol", "[dynamics]") {
  SystemModel m = l2_system(reference_params(ReferenceOrbit::WeakMonopole));
  double prev = 0.0;
  for (double rt = 1e-7; rt > 1e-10; rt /= 2.0) {
    FlowOptions o;
    o.rtol = rt;
    o.atol = rt * 1e-2;
    Trajectory tr = hamiltonian_flow(m, reference_initial_point(), 30.0, o);
    double d = drift_report(tr, m).at("H");
    if (prev > 0.0) CHECK(d <= 2.0 * prev);
    prev = d;
  }
  CHECK(prev < 1e-8);
}

TEST_CASE("flow status paths", "[dynamics]") {
  SystemModel straight = named_case3(0.0, 0.0);  // free motion, but declared axis-singular
  FlowOptions wide;
  wide.axis_margin = 0.5;
  Trajectory ax = hamiltonian_flow(straight, cart({1.0, 0.0, 0.0}, {-1.0, 0.1, 0.0}), 5.0, wide);
  CHECK(ax.status == FlowStatus::AxisAbort);
  CHECK(ax.last_time() < 1.6);
  CHECK_FALSE(ax.message.empty());

  Trajectory on_axis = hamiltonian_flow(named_case1(1.0, 0.5), cart({0.0, 0.0, 1.0}, {1, 0, 0}), 1.0);
  CHECK(on_axis.status == FlowStatus::AxisAbort);

  FlowOptions small;
  small.escape_radius = 10.0;
  Trajectory esc = hamiltonian_flow(straight, cart({1.0, 0.0, 0.0}, {1.0, 1.0, 0.0}), 100.0, small);
  CHECK(esc.status == FlowStatus::Unbounded);
  ClosureResult cr = closure_from_trajectory(esc, 1e-3);
  CHECK_FALSE(cr.closed);
  CHECK(cr.status == FlowStatus::Unbounded);

  FlowOptions few;
  few.max_steps = 5;
  Trajectory cut = hamiltonian_flow(named_case2(1.0), cart({1, 0, 0}, {0, 1, 0}), 100.0, few);
  CHECK(cut.status == FlowStatus::StepFailure);
  CHECK(cut.steps() == 5);

  CHECK_THROWS_AS(hamiltonian_flow(named_case2(1.0), cart({1, 0, 0}, {0, 1, 0}), 0.0), Error);
  CHECK_THROWS(hamiltonian_flow(named_case2(1.0), {Chart::circular_parabolic(), {0.0, 1.0, 0.0}, {0, 0, 0}}, 1.0));
}

TEST_CASE("closure detection invariants", "[dynamics]") {
  SystemModel m = pure_field(2.0);
  Trajectory tr = hamiltonian_flow(m, cart({1.0, 0.0, 0.0}, {0.0, -0.5, 0.0}), 20.0);
  REQUIRE(tr.status == FlowStatus::Completed);
  for (double tol : {1e-2, 1e-4, 1e-6}) {
    ClosureResult c = closure_from_trajectory(tr, tol);
    if (c.closed) {
      CHECK(c.closure_distance < tol);
      CHECK(c.period_estimate > 0.0);
      CHECK(c.period_estimate >= tr.times[10]);
    }
  }
  // minima are refined to the true return time
  auto minima = distance_minima(tr);
  REQUIRE_FALSE(minima.empty());
  CHECK(minima.front().first == Approx(pi).epsilon(1e-8));
  CHECK(minima.front().second < 1e-7);

  // too short to pass the guard: no candidates at all
  Trajectory tiny = hamiltonian_flow(m, cart({1.0, 0.0, 0.0}, {0.0, -0.5, 0.0}), 1e-3);
  CHECK(distance_minima(tiny).empty());
}

TEST_CASE("trajectory export", "[dynamics]") {
  SystemModel m = pure_field(1.0);
  Trajectory tr = hamiltonian_flow(m, cart({1.0, 0.0, 0.0}, {0.0, 0.5, 0.0}), 8.0);
  tr.integral_drift = drift_report(tr, m);
  ClosureResult c = closure_from_trajectory(tr, 1e-3);
  REQUIRE(c.closed);

  std::ostringstream csv;
  write_csv(csv, tr);
  std::string text = csv.str();
  CHECK(text.rfind("t,x,y,z,px,py,pz\n", 0) == 0);
  CHECK(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')) == tr.times.size() + 1);

  auto j = trajectory_json(tr);
  CHECK(j["status"] == "Completed");
  CHECK(j["states"].size() == tr.times.size());
  CHECK(j["drift"].contains("H"));
  CHECK_FALSE(trajectory_json(tr, false).contains("states"));

  auto cj = to_json(c);
  CHECK(cj["closed"] == true);
  CHECK(cj["period_estimate"].get<double>() == Approx(2.0 * pi).epsilon(1e-6));
  ClosureResult open;
  CHECK(to_json(open)["closure_distance"].is_null());

  std::ostringstream gp;
  write_gnuplot(gp, "trajectory.csv", tr, &c);
  std::string g = gp.str();
  CHECK(g.find("palette defined (0 'red', 1 'blue')") != std::string::npos);
  CHECK(g.find("'green'") != std::string::npos);
  CHECK(g.find("splot 'trajectory.csv'") != std::string::npos);
  std::ostringstream gp2;
  write_gnuplot(gp2, "t.csv", tr);
  CHECK(gp2.str().find("'green'") == std::string::npos);
}
