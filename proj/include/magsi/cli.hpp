#pragma once

// Command implementations behind the magsi executable. Each command takes a
// parsed RunConfig plus options and returns an exit code and a JSON report,
// so they can be exercised without a process boundary.
//
// Exit codes: 0 pass, 1 verification failure, 2 config error, 3 runtime abort.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "magsi/catalog.hpp"
#include "magsi/dynamics.hpp"
#include "magsi/errors.hpp"
#include "magsi/geometry.hpp"
#include "magsi/verify.hpp"

namespace magsi::cli {

using nlohmann::json;

enum Exit : int { kPass = 0, kVerificationFailure = 1, kConfigError = 2, kRuntimeAbort = 3 };

struct Options {
  std::uint64_t seed = 1;
  double rtol = 1e-10;
  double atol = 1e-12;
  double tol_bracket = 1e-8;
  double tol_determining = 1e-9;
  double tol_field = 1e-10;
  double tol_identity = 1e-6;
  double tol_closure = 1e-3;
  double t_max = 200.0;
  std::optional<double> t_end;
  std::optional<Vec6> z0;  // Cartesian initial point, overrides the config
  std::vector<double> rtol_sweep;
  int points = 100;
  int threads = 0;  // 0: hardware concurrency
  std::string out_dir;
  std::string format = "json";
};

struct Result {
  int exit_code = kPass;
  json report;
};

// ---------------------------------------------------------------------------
// Config

struct RunConfig {
  json raw;
  std::string family;
  std::map<std::string, double> params;
  std::optional<double> a;
  std::optional<json> profiles;
  std::optional<std::pair<std::string, double>> corrupt;
  std::optional<PhasePoint> initial;
  std::optional<double> t_end;
  json scan;  // "cells" and/or "grid"
};

inline const std::set<std::string>& known_families() {
  static const std::set<std::string> f = {"circular_parabolic", "oblate", "prolate", "case1",
                                          "case2",              "case3",  "l2",      "l2_parabolic"};
  return f;
}

namespace detail {

inline double number(const json& j, const std::string& what) {
  if (!j.is_number()) throw ConfigError(what + " must be a number, got " + j.dump());
  double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(what + " must be finite");
  return v;
}

inline Vec3 vec3(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(what + " must be an array of 3 numbers");
  return {number(j[0], what), number(j[1], what), number(j[2], what)};
}

inline Chart chart_from_json(const json& j, std::optional<double> a) {
  std::string name = j.is_string() ? j.get<std::string>() : "";
  if (name == "cartesian") return Chart::cartesian();
  if (name == "circular_parabolic") return Chart::circular_parabolic();
  if (name == "oblate" || name == "prolate") {
    if (!a) throw ConfigError("chart '" + name + "' needs \"a\"");
    return name == "oblate" ? Chart::oblate(*a) : Chart::prolate(*a);
  }
  throw ConfigError("unknown chart " + j.dump());
}

inline std::map<std::string, double> params_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("\"params\" must be an object");
  std::map<std::string, double> out;
  for (auto it = j.begin(); it != j.end(); ++it) out[it.key()] = number(it.value(), "param " + it.key());
  return out;
}

inline PhasePoint initial_from_json(const json& j, std::optional<double> a) {
  if (!j.is_object()) throw ConfigError("\"initial\" must be an object with q and p");
  Chart c = j.contains("chart") ? chart_from_json(j["chart"], a) : Chart::cartesian();
  if (!j.contains("q") || !j.contains("p")) throw ConfigError("\"initial\" needs \"q\" and \"p\"");
  return {c, vec3(j["q"], "initial.q"), vec3(j["p"], "initial.p")};
}

inline void require_params(const RunConfig& c, std::initializer_list<const char*> allowed) {
  for (const auto& [k, v] : c.params) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) throw ConfigError("family '" + c.family + "' has no parameter '" + k + "'");
  }
}

inline double param_or(const RunConfig& c, const char* key, double fallback = 0.0) {
  auto it = c.params.find(key);
  return it == c.params.end() ? fallback : it->second;
}

}  // namespace detail

inline RunConfig parse_config(const json& j) {
  static const std::set<std::string> keys = {"family", "a",     "params", "profiles", "corrupt",
                                             "initial", "t_end", "cells",  "grid",     "description"};
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!keys.count(it.key())) throw ConfigError("unknown config key '" + it.key() + "'");
  RunConfig c;
  c.raw = j;
  if (!j.contains("family") || !j["family"].is_string()) throw ConfigError("config needs a string \"family\"");
  c.family = j["family"].get<std::string>();
  if (!known_families().count(c.family)) throw ConfigError("unknown family '" + c.family + "'");
  if (j.contains("a")) {
    c.a = detail::number(j["a"], "a");
    if (!(*c.a > 0.0)) throw ConfigError("\"a\" must be positive");
  }
  if ((c.family == "oblate" || c.family == "prolate") && !c.a) throw ConfigError("family '" + c.family + "' needs \"a\"");
  if (j.contains("params")) c.params = detail::params_from_json(j["params"]);
  if (j.contains("profiles")) {
    if (!j["profiles"].is_object()) throw ConfigError("\"profiles\" must be an object");
    c.profiles = j["profiles"];
  }
  if (j.contains("corrupt")) {
    const json& k = j["corrupt"];
    if (!k.is_object() || !k.contains("integral") || !k["integral"].is_string())
      throw ConfigError("\"corrupt\" needs a string \"integral\"");
    c.corrupt = {k["integral"].get<std::string>(), detail::number(k.value("epsilon", json(0.1)), "corrupt.epsilon")};
  }
  if (j.contains("initial")) c.initial = detail::initial_from_json(j["initial"], c.a);
  if (j.contains("t_end")) c.t_end = detail::number(j["t_end"], "t_end");
  if (j.contains("cells")) {
    if (!j["cells"].is_array()) throw ConfigError("\"cells\" must be an array");
    c.scan["cells"] = j["cells"];
  }
  if (j.contains("grid")) {
    if (!j["grid"].is_object()) throw ConfigError("\"grid\" must be an object of parameter -> array");
    for (auto it = j["grid"].begin(); it != j["grid"].end(); ++it)
      if (!it.value().is_array() || it.value().empty())
        throw ConfigError("grid entry '" + it.key() + "' must be a non-empty array");
    c.scan["grid"] = j["grid"];
  }
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("invalid JSON in '" + path + "': " + e.what());
  }
  return parse_config(j);
}

/// X -> X + epsilon * z[0], the negative control used by the verify command.
inline void apply_corruption(SystemModel& m, const std::string& name, double eps) {
  for (auto& i : m.integrals) {
    if (i.name == name) {
      PhaseScalar orig = i.fn;
      i.fn = PhaseScalar([orig, eps](const auto& z) { return orig(z) + eps * z[0]; });
      return;
    }
  }
  throw ConfigError("corrupt: system has no integral '" + name + "'");
}

inline SystemModel build_system(const RunConfig& c) {
  SystemModel m;
  auto profiles = [&](ProfileArgument arg) {
    if (!c.profiles) throw ConfigError("family '" + c.family + "' needs \"profiles\"");
    return ProfileSet::from_json(*c.profiles, arg);
  };
  using detail::param_or;
  using detail::require_params;
  if (c.family == "circular_parabolic") {
    require_params(c, {});
    m = circular_parabolic_system(profiles(ProfileArgument::Squared));
  } else if (c.family == "oblate") {
    require_params(c, {});
    m = oblate_system(*c.a, profiles(ProfileArgument::Direct));
  } else if (c.family == "prolate") {
    require_params(c, {});
    m = prolate_system(*c.a, profiles(ProfileArgument::Direct));
  } else if (c.family == "case1") {
    require_params(c, {"b_z", "omega"});
    m = named_case1(param_or(c, "b_z"), param_or(c, "omega"));
  } else if (c.family == "case2") {
    require_params(c, {"b_z"});
    m = named_case2(param_or(c, "b_z"));
  } else if (c.family == "case3") {
    require_params(c, {"b_m", "omega"});
    m = named_case3(param_or(c, "b_m"), param_or(c, "omega"));
  } else {
    require_params(c, {"b_z", "b_m", "b_n", "u1", "u2", "u3"});
    L2Params p = L2Params::from_map(c.params);
    m = c.family == "l2" ? l2_system(p) : l2_system_parabolic(p);
  }
  if (c.corrupt) apply_corruption(m, c.corrupt->first, c.corrupt->second);
  return m;
}

// ---------------------------------------------------------------------------
// verify

inline Result cmd_verify(const RunConfig& cfg, const Options& o) {
  SystemModel m = build_system(cfg);
  Result r;
  json& rep = r.report;
  std::vector<std::string> failures;
  rep["command"] = "verify";
  rep["family"] = cfg.family;
  rep["seed"] = o.seed;

  BracketReport br = check_commutation(m, o.points, o.tol_bracket, o.seed);
  rep["commutation"] = to_json(br);
  for (const auto& p : br.pairs)
    if (!(p.max_residual < o.tol_bracket)) failures.push_back("bracket {" + p.first + "," + p.second + "}");

  if (cfg.family == "circular_parabolic") {
    Sampler s(m.chart, o.seed + 1);
    std::map<std::string, double> worst;
    std::vector<std::string> order;
    for (int k = 0; k < o.points; ++k) {
      for (const auto& e : determining_residuals(*m.profiles, s.position())) {
        std::string key = e.bracket + " " + e.coefficient;
        if (!worst.count(key)) order.push_back(key);
        worst[key] = std::max(worst[key], e.residual);
      }
    }
    json eqs = json::array();
    bool ok = true;
    for (const auto& key : order) {
      eqs.push_back({{"equation", key}, {"max_residual", worst[key]}});
      if (!(worst[key] < o.tol_determining)) {
        ok = false;
        failures.push_back("determining equation " + key);
      }
    }
    rep["determining_equations"] = {{"equations", eqs}, {"tolerance", o.tol_determining}, {"pass", ok}};
  }

  IndependenceReport ir = functional_independence(m, 5, o.seed + 2);
  json ij = to_json(ir);
  int expected = m.family == "circular_parabolic" || m.family == "oblate" || m.family == "prolate"
                     ? 3
                     : static_cast<int>(m.all_functions().size());
  ij["expected_rank"] = expected;
  ij["pass"] = ir.rank == expected;
  if (ir.rank != expected) failures.push_back("functional independence");
  rep["independence"] = ij;

  FieldReport fr = check_fields(m, o.points, o.tol_field, o.seed + 3);
  rep["fields"] = to_json(fr);
  if (!fr.pass) failures.push_back("B = dA / div B");

  if (m.family == "l2") {
    Sampler s(m.chart, o.seed + 4);
    double worst = 0.0;
    for (int k = 0; k < o.points; ++k) worst = std::max(worst, closure_identity_residual(m, s.phase()));
    bool ok = worst < o.tol_identity;
    rep["closure_identity"] = {{"max_residual", worst}, {"tolerance", o.tol_identity}, {"pass", ok}};
    if (!ok) failures.push_back("closure identity");
  }

  rep["failures"] = failures;
  rep["pass"] = failures.empty();
  r.exit_code = failures.empty() ? kPass : kVerificationFailure;
  return r;
}

// ---------------------------------------------------------------------------
// simulate

inline PhasePoint initial_point(const RunConfig& cfg, const Options& o) {
  if (o.z0) return PhasePoint::from_z(Chart::cartesian(), *o.z0);
  if (cfg.initial) return *cfg.initial;
  throw ConfigError("no initial point: give \"initial\" in the config or --z0");
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p);
  if (!f) throw Error("cannot write '" + p.string() + "'");
  f << text;
}

inline Result cmd_simulate(const RunConfig& cfg, const Options& o) {
  SystemModel m = build_system(cfg);
  PhasePoint z0 = initial_point(cfg, o);
  double t_end = o.t_end.value_or(cfg.t_end.value_or(o.t_max));
  FlowOptions fo;
  fo.rtol = o.rtol;
  fo.atol = o.atol;
  Trajectory tr = hamiltonian_flow(m, z0, t_end, fo);
  tr.integral_drift = drift_report(tr, m);
  ClosureResult cl = closure_from_trajectory(tr, o.tol_closure);

  Result r;
  json& rep = r.report;
  rep["command"] = "simulate";
  rep["family"] = cfg.family;
  rep["trajectory"] = trajectory_json(tr, false);
  rep["closure"] = to_json(cl);
  if (tr.status != FlowStatus::Completed) rep["last_good_time"] = tr.last_time();

  if (!o.rtol_sweep.empty()) {
    json sweep = json::array();
    for (double rt : o.rtol_sweep) {
      FlowOptions so = fo;
      so.rtol = rt;
      so.atol = rt * 1e-2;
      Trajectory t2 = hamiltonian_flow(m, z0, t_end, so);
      sweep.push_back({{"rtol", rt}, {"status", status_name(t2.status)}, {"drift", drift_report(t2, m)}});
    }
    rep["rtol_sweep"] = sweep;
  }

  if (!o.out_dir.empty()) {
    std::filesystem::path dir(o.out_dir);
    std::filesystem::create_directories(dir);
    json files = json::array();
    if (o.format == "csv") {
      std::ostringstream csv;
      write_csv(csv, tr);
      write_file(dir / "trajectory.csv", csv.str());
      files.push_back("trajectory.csv");
    } else {
      write_file(dir / "trajectory.json", trajectory_json(tr, true).dump(2) + "\n");
      files.push_back("trajectory.json");
    }
    json drift = {{"drift", tr.integral_drift}, {"status", status_name(tr.status)}, {"closure", to_json(cl)}};
    write_file(dir / "drift.json", drift.dump(2) + "\n");
    files.push_back("drift.json");
    // the gnuplot script always reads the CSV
    if (o.format != "csv") {
      std::ostringstream csv;
      write_csv(csv, tr);
      write_file(dir / "trajectory.csv", csv.str());
      files.push_back("trajectory.csv");
    }
    std::ostringstream gp;
    write_gnuplot(gp, "trajectory.csv", tr, &cl);
    write_file(dir / "trajectory.gp", gp.str());
    files.push_back("trajectory.gp");
    rep["files"] = files;
  }
  r.exit_code = tr.status == FlowStatus::Completed ? kPass : kRuntimeAbort;
  return r;
}

// ---------------------------------------------------------------------------
// closure-scan

struct ScanCell {
  std::map<std::string, double> params;
  std::optional<PhasePoint> initial;
};

/// Cells from "cells" (explicit overrides) followed by the cartesian product of "grid".
inline std::vector<ScanCell> scan_cells(const RunConfig& cfg) {
  std::vector<ScanCell> cells;
  if (cfg.scan.contains("cells")) {
    for (const auto& c : cfg.scan["cells"]) {
      if (!c.is_object()) throw ConfigError("each scan cell must be an object");
      ScanCell cell{cfg.params, cfg.initial};
      if (c.contains("params"))
        for (const auto& [k, v] : detail::params_from_json(c["params"])) cell.params[k] = v;
      if (c.contains("initial")) cell.initial = detail::initial_from_json(c["initial"], cfg.a);
      cells.push_back(cell);
    }
  }
  if (cfg.scan.contains("grid")) {
    std::vector<std::pair<std::string, std::vector<double>>> axes;
    for (auto it = cfg.scan["grid"].begin(); it != cfg.scan["grid"].end(); ++it) {
      std::vector<double> vals;
      for (const auto& v : it.value()) vals.push_back(detail::number(v, "grid " + it.key()));
      axes.emplace_back(it.key(), vals);
    }
    std::size_t total = 1;
    for (const auto& ax : axes) total *= ax.second.size();
    for (std::size_t n = 0; n < total; ++n) {
      ScanCell cell{cfg.params, cfg.initial};
      std::size_t rem = n;
      for (std::size_t a = axes.size(); a-- > 0;) {
        cell.params[axes[a].first] = axes[a].second[rem % axes[a].second.size()];
        rem /= axes[a].second.size();
      }
      cells.push_back(cell);
    }
  }
  if (cells.empty()) cells.push_back({cfg.params, cfg.initial});
  return cells;
}

inline json scan_row(const RunConfig& cfg, const ScanCell& cell, std::size_t index, const Options& o) {
  json row = {{"index", index}, {"params", cell.params}};
  try {
    RunConfig c = cfg;
    c.params = cell.params;
    c.initial = cell.initial;
    SystemModel m = build_system(c);
    PhasePoint z0 = initial_point(c, o);
    FlowOptions fo;
    fo.rtol = o.rtol;
    fo.atol = o.atol;
    ClosureResult cr = detect_closure(m, z0, o.t_max, o.tol_closure, fo);
    row["closed"] = cr.closed;
    row["period"] = cr.period_estimate;
    row["closure_distance"] = std::isfinite(cr.closure_distance) ? json(cr.closure_distance) : json();
    row["status"] = status_name(cr.status);
    if (!cr.message.empty()) row["message"] = cr.message;
  } catch (const std::exception& e) {
    row["closed"] = false;
    row["status"] = "Error";
    row["error"] = e.what();
  }
  return row;
}

inline Result cmd_closure_scan(const RunConfig& cfg, const Options& o) {
  std::vector<ScanCell> cells = scan_cells(cfg);
  std::vector<json> rows(cells.size());
  unsigned n_threads = o.threads > 0 ? static_cast<unsigned>(o.threads) : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(cells.size()));
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < n_threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < cells.size(); i = next++) rows[i] = scan_row(cfg, cells[i], i, o);
    });
  for (auto& t : pool) t.join();

  Result r;
  r.report["command"] = "closure-scan";
  r.report["family"] = cfg.family;
  r.report["t_max"] = o.t_max;
  r.report["tolerance"] = o.tol_closure;
  r.report["rows"] = rows;
  return r;
}

inline std::string scan_csv(const json& report) {
  std::ostringstream os;
  os.precision(17);
  os << "index,closed,period,closure_distance,status\n";
  for (const auto& row : report["rows"]) {
    os << row["index"].get<std::size_t>() << ',' << (row["closed"].get<bool>() ? "true" : "false") << ',';
    if (row.contains("period")) os << row["period"].get<double>();
    os << ',';
    if (row.contains("closure_distance") && row["closure_distance"].is_number())
      os << row["closure_distance"].get<double>();
    os << ',' << row["status"].get<std::string>() << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// export: H, W, |B| and the integrals at seeded sample points, Cartesian coordinates.

inline Result cmd_export(const RunConfig& cfg, const Options& o) {
  SystemModel m = build_system(cfg);
  SystemModel cart = cartesian_form(m);
  Sampler s(m.chart, o.seed);
  std::vector<std::string> cols = {"x", "y", "z", "px", "py", "pz", "W", "B_norm"};
  for (const auto& f : cart.all_functions()) cols.push_back(f.name);
  json rows = json::array();
  for (int k = 0; k < o.points; ++k) {
    Vec6 zc = s.phase();
    if (m.chart.kind != ChartKind::Cartesian) zc = push_phase(PhasePoint::from_z(m.chart, zc), Chart::cartesian()).z();
    Vec3 x{zc[0], zc[1], zc[2]};
    json row = json::array();
    for (double v : zc) row.push_back(v);
    row.push_back(cart.potential(x));
    row.push_back(norm3(cart.field(x)));
    for (const auto& f : cart.all_functions()) row.push_back(f.fn(zc));
    rows.push_back(row);
  }
  Result r;
  r.report = {{"command", "export"}, {"family", cfg.family}, {"seed", o.seed}, {"columns", cols}, {"rows", rows}};
  return r;
}

inline std::string export_csv(const json& report) {
  std::ostringstream os;
  os.precision(17);
  const auto& cols = report["columns"];
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i].get<std::string>();
  os << '\n';
  for (const auto& row : report["rows"]) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i].get<double>();
    os << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------

inline json error_json(const std::string& kind, const std::string& message) {
  return {{"error", kind}, {"message", message}};
}

/// Runs one command and converts library exceptions into exit codes.
inline Result run(const std::string& command, const RunConfig& cfg, const Options& o) {
  try {
    if (command == "verify") return cmd_verify(cfg, o);
    if (command == "simulate") return cmd_simulate(cfg, o);
    if (command == "closure-scan") return cmd_closure_scan(cfg, o);
    if (command == "export") return cmd_export(cfg, o);
    return {kConfigError, error_json("ConfigError", "unknown command '" + command + "'")};
  } catch (const ConfigError& e) {
    return {kConfigError, error_json("ConfigError", e.what())};
  } catch (const ProfileDomain& e) {
    return {kConfigError, error_json("ProfileDomain", e.what())};
  } catch (const OutOfRange& e) {
    return {kConfigError, error_json("OutOfRange", e.what())};
  } catch (const AxisSingularity& e) {
    return {kRuntimeAbort, error_json("AxisSingularity", e.what())};
  } catch (const std::exception& e) {
    return {kRuntimeAbort, error_json("RuntimeError", e.what())};
  }
}

}  // namespace magsi::cli
