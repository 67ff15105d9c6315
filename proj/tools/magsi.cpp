// magsi: verify, simulate, closure-scan and export for the catalog systems.
//
//   magsi verify --config configs/case1.json
//   magsi simulate --config configs/l2_weak_monopole.json --out run/ --format csv
//   magsi closure-scan --config configs/l2_reference_scan.json
//   magsi export --config configs/oblate_case1.json --format csv

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "magsi/cli.hpp"

namespace {

std::vector<double> parse_list(const std::string& s, const char* what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw magsi::ConfigError(std::string(what) + ": cannot parse '" + item + "' as a number");
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace magsi::cli;
  CLI::App app{"Integrable and superintegrable systems in magnetic fields"};
  app.require_subcommand(1, 1);

  std::string config_path, z0_text, sweep_text;
  Options o;
  double t_end = 0.0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "System config (JSON)")->required();
    sub->add_option("--seed", o.seed, "Sampling seed")->capture_default_str();
    sub->add_option("--rtol", o.rtol, "Integrator relative tolerance")->capture_default_str();
    sub->add_option("--atol", o.atol, "Integrator absolute tolerance")->capture_default_str();
    sub->add_option("--tol-bracket", o.tol_bracket, "Normalized bracket tolerance")->capture_default_str();
    sub->add_option("--tol-closure", o.tol_closure, "Phase-space closure tolerance")->capture_default_str();
    sub->add_option("--t-max", o.t_max, "Closure search horizon")->capture_default_str();
    sub->add_option("--points", o.points, "Number of sample points")->capture_default_str();
    sub->add_option("--out", o.out_dir, "Output directory");
    sub->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  };

  auto* verify = app.add_subcommand("verify", "Commutation, determining equations, rank, fields, closure identity");
  add_common(verify);
  auto* simulate = app.add_subcommand("simulate", "Integrate one trajectory and write CSV/JSON/gnuplot files");
  add_common(simulate);
  simulate->add_option("--t-end", t_end, "Integration time (default: config t_end, else --t-max)");
  simulate->add_option("--z0", z0_text, "Cartesian initial point x,y,z,px,py,pz");
  simulate->add_option("--rtol-sweep", sweep_text, "Comma-separated rtol values for a drift sweep");
  auto* scan = app.add_subcommand("closure-scan", "Closure detection over a grid of cells");
  add_common(scan);
  scan->add_option("--threads", o.threads, "Worker threads (0: all cores)");
  auto* exporter = app.add_subcommand("export", "Table of H, W, |B| and integrals at sample points");
  add_common(exporter);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  std::string command = app.get_subcommands().front()->get_name();
  Result r;
  try {
    if (simulate->count("--t-end")) o.t_end = t_end;
    if (!z0_text.empty()) {
      auto v = parse_list(z0_text, "--z0");
      if (v.size() != 6) throw magsi::ConfigError("--z0 needs six comma-separated numbers");
      o.z0 = magsi::Vec6{v[0], v[1], v[2], v[3], v[4], v[5]};
    }
    if (!sweep_text.empty()) o.rtol_sweep = parse_list(sweep_text, "--rtol-sweep");
    RunConfig cfg = load_config(config_path);
    r = run(command, cfg, o);
  } catch (const magsi::ConfigError& e) {
    r = {kConfigError, error_json("ConfigError", e.what())};
  } catch (const std::exception& e) {
    r = {kRuntimeAbort, error_json("RuntimeError", e.what())};
  }

  if (r.report.contains("error")) {
    std::cerr << r.report.dump() << '\n';
    return r.exit_code;
  }

  std::string text;
  bool csv = o.format == "csv" && (command == "closure-scan" || command == "export");
  if (csv)
    text = command == "export" ? export_csv(r.report) : scan_csv(r.report);
  else
    text = r.report.dump(2) + "\n";
  std::cout << text;

  if (!o.out_dir.empty() && command != "simulate") {
    std::filesystem::create_directories(o.out_dir);
    std::string name = command + (csv ? ".csv" : ".json");
    std::ofstream(std::filesystem::path(o.out_dir) / name) << text;
  }
  return r.exit_code;
}
