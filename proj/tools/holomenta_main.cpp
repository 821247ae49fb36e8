// Command-line front end: simulate trajectories to CSV, analyze a system's
// symmetry for conserved momenta, and run the builtin self-check suites.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "holomenta/checks.hpp"
#include "holomenta/io.hpp"
#include "holomenta/systems.hpp"

namespace {

using namespace holomenta;

constexpr int kExitOk = 0;
constexpr int kExitNotCertified = 1;
constexpr int kExitConfig = 2;
constexpr int kExitIntegration = 3;

Vec parse_csv_floats(const std::string& text) {
  std::vector<double> vals;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      vals.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError("cannot parse '" + item + "' as a number");
    }
  }
  Vec out(vals.size());
  for (std::size_t i = 0; i < vals.size(); ++i) out[i] = vals[i];
  return out;
}

double residual_tol_from_env() {
  if (const char* env = std::getenv("HOLOMENTA_TOL")) {
    try {
      return std::stod(env);
    } catch (const std::exception&) {
      throw ConfigError("HOLOMENTA_TOL is not a number");
    }
  }
  return 1e-7;
}

/// The system under study plus everything the analysis needs to sample it.
struct Bundle {
  std::string label;
  std::string w_variant;
  mech::MechanicalSystem system;
  sym::LieAlgebraAction action;
  std::optional<systems::BuiltinFixture> fixture;
  std::optional<io::LoadedConfig> config;

  std::vector<mech::MPoint> samples(int count, std::uint64_t seed) const {
    if (fixture) return systems::sample_states(*fixture, count, seed);
    return io::config_samples(*config, count, seed);
  }

  mech::MPoint default_start() const {
    if (fixture) return fixture->start;
    auto s = samples(1, 0);
    return s.front();
  }
};

Bundle make_bundle(const std::string& builtin_name,
                   const std::string& config_path,
                   const std::string& w_variant) {
  Bundle b;
  if (!builtin_name.empty() && !config_path.empty())
    throw ConfigError("--builtin and --config are mutually exclusive");
  if (builtin_name.empty() && config_path.empty())
    throw ConfigError("one of --builtin or --config is required");
  if (!builtin_name.empty()) {
    systems::BuiltinFixture fix = systems::builtin(builtin_name);
    b.label = fix.name;
    b.w_variant = w_variant.empty() ? fix.w_variants.front().name : w_variant;
    b.system = fix.with_w_variant(b.w_variant);
    b.action = fix.action;
    fix.system = b.system;
    b.fixture = std::move(fix);
  } else {
    if (!w_variant.empty())
      throw ConfigError("--w-variant applies to builtins only");
    io::LoadedConfig cfg = io::load_config(config_path);
    b.label = cfg.name;
    b.system = cfg.system;
    b.action = cfg.action;
    b.config = std::move(cfg);
  }
  return b;
}

struct SimulateArgs {
  std::string builtin_name, config_path, w_variant;
  std::string q0_text, v0_text;
  double t_final = 0.0;
  double dt = 0.0;
  double tol = 1e-10;
  std::string integrator = "rk45";
  std::string out_path;
  std::string observables = "auto";
  int samples = 201;
  int analysis_samples = 50;
  std::uint64_t seed = 0;
};

int run_simulate(const SimulateArgs& args) {
  Bundle b = make_bundle(args.builtin_name, args.config_path, args.w_variant);
  if (!(args.t_final > 0.0)) throw ConfigError("t_final must be positive");
  if (args.integrator != "rk4" && args.integrator != "rk45")
    throw ConfigError("--integrator must be rk4 or rk45");
  if (args.integrator == "rk4" && args.dt <= 0.0)
    throw ConfigError("rk4 requires --dt > 0");
  if (args.out_path.empty()) throw ConfigError("--out is required");
  if (args.observables != "auto" && args.observables != "none")
    throw ConfigError("--observables must be auto or none");
  if (args.samples < 2) throw ConfigError("--samples must be at least 2");

  mech::MPoint m0 = b.default_start();
  if (!args.q0_text.empty()) m0.q = parse_csv_floats(args.q0_text);
  if (!args.v0_text.empty()) m0.v = parse_csv_floats(args.v0_text);
  if (m0.q.size() != b.system.n)
    throw ConfigError("--q0 must have " + std::to_string(b.system.n) +
                      " entries");
  if (m0.v.size() != b.system.r)
    throw ConfigError("--v0 must have " + std::to_string(b.system.r) +
                      " entries");

  ode::OdeOptions opts;
  opts.method = args.integrator;
  opts.dt = args.dt;
  opts.tol = args.tol;
  opts.samples = args.samples;

  std::vector<std::pair<std::string, ode::Observable>> observables;
  if (args.observables == "auto" && b.action.s > 0) {
    sym::PipelineOptions popts;
    popts.residual_tol = residual_tol_from_env();
    popts.traj_start = m0;
    const auto analysis = sym::analyze_symmetries(
        b.system, b.action, b.samples(args.analysis_samples, args.seed),
        popts);
    int index = 0;
    for (const auto& report : analysis.reports) {
      if (report.verdict != sym::Verdict::certified) continue;
      const auto sys = b.system;
      const auto act = b.action;
      const Vec eta = report.eta;
      observables.emplace_back(
          "gauge_" + std::to_string(index++),
          [sys, act, eta](const mech::MPoint& m) {
            return sym::gauge_momentum_value(sys, act, m, eta);
          });
    }
  }

  const ode::Trajectory traj =
      ode::integrate(b.system, m0, args.t_final, opts);
  io::write_file_atomic(args.out_path,
                        io::trajectory_csv(b.system, traj, observables));
  std::cerr << "wrote " << traj.times.size() << " samples to "
            << args.out_path << " (" << traj.stats.accepted
            << " accepted steps)\n";
  return kExitOk;
}

struct AnalyzeArgs {
  std::string builtin_name, config_path, w_variant;
  int samples = 50;
  std::uint64_t seed = 0;
  std::string report_path;
  double t_final = 10.0;
};

int run_analyze(const AnalyzeArgs& args) {
  Bundle b = make_bundle(args.builtin_name, args.config_path, args.w_variant);
  if (args.samples < 2) throw ConfigError("--samples must be at least 2");

  const auto samples = b.samples(args.samples, args.seed);

  io::ReportMeta meta;
  meta.system = b.label;
  meta.w_variant = b.w_variant;
  meta.residual_tol = residual_tol_from_env();
  meta.sample_count = args.samples;
  meta.seed = args.seed;
  meta.rank_tol = b.system.rank_tol;

  sym::PipelineResult result;
  bool dim_ok = true;
  for (const auto& m : samples)
    dim_ok = dim_ok && sym::dimension_assumption(b.system, b.action, m.q);
  if (dim_ok) {
    sym::PipelineOptions popts;
    popts.residual_tol = meta.residual_tol;
    popts.traj_start = b.default_start();
    popts.traj_t_final = args.t_final;
    result = sym::analyze_symmetries(b.system, b.action, samples, popts);
  }

  const io::Json doc = io::analysis_report_json(result, samples, meta);
  if (!args.report_path.empty())
    io::write_file_atomic(args.report_path, doc.dump(2) + "\n");
  else
    std::cout << doc.dump(2) << "\n";

  int certified = 0;
  for (const auto& r : result.reports)
    if (r.verdict == sym::Verdict::certified) ++certified;
  std::cerr << b.label << ": rank S = " << result.rank_s << ", " << certified
            << "/" << result.reports.size() << " candidates certified\n";

  const bool all_certified =
      dim_ok && certified == static_cast<int>(result.reports.size());
  return all_certified ? kExitOk : kExitNotCertified;
}

int run_check(const std::string& builtin_name) {
  const auto rows = checks::run_fixture_checks(builtin_name);
  std::size_t width = 0;
  for (const auto& r : rows) width = std::max(width, r.name.size());
  int failures = 0;
  for (const auto& r : rows) {
    if (!r.passed) ++failures;
    std::cout << (r.passed ? "[PASS] " : "[FAIL] ") << r.name
              << std::string(width - r.name.size() + 2, ' ') << r.detail
              << "\n";
  }
  std::cout << (failures == 0 ? "PASS" : "FAIL") << " (" << rows.size()
            << " checks, " << failures << " failures)\n";
  return failures == 0 ? kExitOk : kExitNotCertified;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nonholonomic mechanics engine: simulation and conserved-"
               "momentum discovery"};
  app.require_subcommand(1);

  SimulateArgs sim;
  CLI::App* simulate = app.add_subcommand(
      "simulate", "integrate the dynamics and write a CSV trajectory");
  simulate->add_option("--builtin", sim.builtin_name,
                       "builtin system (particle, disk, ball)");
  simulate->add_option("--config", sim.config_path, "JSON system config");
  simulate->add_option("--w-variant", sim.w_variant,
                       "vertical-complement variant of a builtin");
  simulate->add_option("--q0", sim.q0_text, "initial coordinates, CSV");
  simulate->add_option("--v0", sim.v0_text, "initial quasi-velocities, CSV");
  simulate->add_option("--t-final", sim.t_final, "final time")->required();
  simulate->add_option("--dt", sim.dt, "rk4 fixed step");
  simulate->add_option("--tol", sim.tol, "rk45 tolerance (default 1e-10)");
  simulate->add_option("--integrator", sim.integrator, "rk4 or rk45");
  simulate->add_option("--out", sim.out_path, "output CSV path")->required();
  simulate->add_option("--observables", sim.observables,
                       "auto: append certified gauge momenta; none");
  simulate->add_option("--samples", sim.samples, "output rows (default 201)");
  simulate->add_option("--seed", sim.seed, "seed for the auto analysis");

  AnalyzeArgs ana;
  CLI::App* analyze = app.add_subcommand(
      "analyze", "discover and certify gauge momenta, write a JSON report");
  analyze->add_option("--builtin", ana.builtin_name, "builtin system");
  analyze->add_option("--config", ana.config_path, "JSON system config");
  analyze->add_option("--w-variant", ana.w_variant,
                      "vertical-complement variant of a builtin");
  analyze->add_option("--samples", ana.samples, "sample count (default 50)");
  analyze->add_option("--seed", ana.seed, "sampling seed (default 0)");
  analyze->add_option("--report", ana.report_path, "report JSON path");
  analyze->add_option("--t-final", ana.t_final,
                      "empirical-drift horizon (default 10)");

  std::string check_name;
  CLI::App* check = app.add_subcommand(
      "check", "run a builtin fixture's invariant and drift suite");
  check->add_option("--builtin", check_name, "builtin system")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (simulate->parsed()) return run_simulate(sim);
    if (analyze->parsed()) return run_analyze(ana);
    if (check->parsed()) return run_check(check_name);
  } catch (const StepFailure& e) {
    std::cerr << "integration failure: " << e.what() << "\n";
    return kExitIntegration;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}
