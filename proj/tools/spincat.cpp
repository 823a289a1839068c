// spincat: command-line front end.
//
//   spincat cat        --n-atoms N --theta TH
//   spincat adiabatic  --n-atoms N --epsilon EPS [--theta TH ...]
//   spincat optimize   --n-atoms N --chi-t T --segments n --theta TH [--restarts R --seed S]
//   spincat scan       --n-atoms N1,N2,... --theta TH1,TH2,... [--segments n]
//
// Exit status: 0 success, 1 numerical or convergence failure, 2 invalid arguments.

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "spincat/adiabatic.hpp"
#include "spincat/control_opt.hpp"
#include "spincat/io.hpp"
#include "spincat/metrology.hpp"
#include "spincat/spin_algebra.hpp"

namespace fs = std::filesystem;
using namespace spincat;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNumerical = 1;
constexpr int kExitUsage = 2;

struct Common {
  int atom_count = 100;
  double chi = 1.0;  // adiabatic runs default to -1
  bool chi_given = false;
  std::uint64_t seed = 0;
  fs::path out_dir = ".";
  bool summary = false;
};

struct CatArgs {
  double theta = 0.0;
  double phi = 0.0;
};

struct AdiabaticArgs {
  double epsilon = 0.05;
  std::vector<double> thetas{0.0, kPi / 6, kPi / 4, kPi / 3};
  AdiabaticConfig config{};
};

struct OptimizeArgs {
  double chi_t = 0.15;
  int segments = 5;
  double theta = 0.0;
  int restarts = OptimizeOptions{}.restarts;
  int threads = 1;
  int trace_points = 10;  // per segment
};

struct ScanArgs {
  std::vector<int> atom_counts;
  std::vector<double> thetas{0.0};
  int segments = 5;
  int restarts = OptimizeOptions{}.restarts;
  int jobs = 1;
  TimeScanOptions scan{};
};

void print_report(const MetrologyReport& r) {
  io::write_report_header(std::cout);
  io::write_report_row(std::cout, r);
}

fs::path output(const Common& c, const std::string& name) { return c.out_dir / name; }

// ---------------------------------------------------------------------------

int run_cat(const Common& c, const CatArgs& a) {
  detail::require(c.atom_count >= 2, "cat: --n-atoms must be at least 2");
  const CatSpec spec{a.theta, a.phi, c.atom_count};
  spec.validate();
  const StateVector psi = cat_state(spec);
  const MetrologyReport report = metrology_report(psi, spec);

  io::write_state(output(c, "cat_state.csv"), psi);
  {
    auto out = io::detail::open_out(output(c, "cat_report.csv"));
    io::write_report_header(out);
    io::write_report_row(out, report);
  }
  if (c.summary) print_report(report);
  return kExitOk;
}

int run_adiabatic_cmd(const Common& c, const AdiabaticArgs& a) {
  detail::require(std::isfinite(a.epsilon) && a.epsilon > 0.0, "adiabatic: --epsilon must be positive");
  detail::require(c.chi < 0.0, "adiabatic: --chi must be negative");
  detail::require(c.atom_count >= 2, "adiabatic: --n-atoms must be at least 2");
  detail::require(!a.thetas.empty(), "adiabatic: at least one --theta is required");
  std::vector<CatSpec> targets;
  for (double th : a.thetas) {
    targets.push_back({th, 0.0, c.atom_count});
    targets.back().validate();
  }

  const AdiabaticRun run = run_adiabatic(c.atom_count, c.chi, a.epsilon, targets, a.config);

  {
    auto out = io::detail::open_out(output(c, "trajectory.csv"));
    io::write_trajectory(out, run.trajectory);
  }
  {
    auto out = io::detail::open_out(output(c, "fidelity_trace.csv"));
    bool header = true;
    for (const TargetTrace& t : run.traces) {
      io::write_fidelity_trace(out, run.trajectory.times, t.target.theta, t.fidelity, header);
      header = false;
    }
  }
  auto summary = io::detail::open_out(output(c, "adiabatic_summary.csv"));
  std::cout << std::setprecision(6);
  const std::string header = "N,epsilon,theta,best_fidelity,best_time,total_time";
  summary << header << '\n';
  std::cout << header << '\n';
  for (const TargetTrace& t : run.traces) {
    summary << c.atom_count << ',' << a.epsilon << ',' << t.target.theta << ',' << t.best_fidelity << ',' << t.best_time
            << ',' << run.trajectory.total_time() << '\n';
    std::cout << c.atom_count << ',' << a.epsilon << ',' << t.target.theta << ',' << t.best_fidelity << ',' << t.best_time
              << ',' << run.trajectory.total_time() << '\n';
  }
  if (c.summary) print_report(metrology_report(run.final_state, targets.front()));
  return kExitOk;
}

int run_optimize(const Common& c, const OptimizeArgs& a) {
  detail::require(c.atom_count >= 2, "optimize: --n-atoms must be at least 2");
  detail::require(std::isfinite(c.chi) && c.chi != 0.0, "optimize: --chi must be nonzero");
  detail::require(std::isfinite(a.chi_t) && a.chi_t > 0.0, "optimize: --chi-t must be positive");
  detail::require(a.segments >= 1, "optimize: --segments must be at least 1");
  detail::require(a.restarts >= 1, "optimize: --restarts must be at least 1");
  detail::require(a.trace_points >= 1, "optimize: --trace-points must be at least 1");
  const CatSpec spec{a.theta, 0.0, c.atom_count};
  spec.validate();
  const StateVector target = cat_state(spec);

  OptimizeOptions opt;
  opt.seed = c.seed;
  opt.restarts = a.restarts;
  opt.threads = a.threads;
  const double total_time = a.chi_t / std::abs(c.chi);
  const OptimizationOutcome outcome =
      optimize(c.atom_count, c.chi, total_time, static_cast<std::size_t>(a.segments), target, opt);

  io::write_schedule(output(c, "schedule.csv"), outcome.best_schedule);

  std::vector<double> times;
  const int points = a.trace_points * a.segments;
  for (int k = 0; k <= points; ++k) times.push_back(total_time * k / points);
  const PropagationResult replay =
      evolve_piecewise(c.atom_count, c.chi, outcome.best_schedule, optimization_initial_state(c.atom_count), times);
  std::vector<double> trace;
  for (const Checkpoint& cp : replay.checkpoints) trace.push_back(fidelity(target, cp.state));
  {
    auto out = io::detail::open_out(output(c, "fidelity_trace.csv"));
    io::write_fidelity_trace(out, times, a.theta, trace);
  }

  io::ResultsLedger ledger(output(c, "results.csv"));
  ledger.append({c.atom_count, static_cast<std::size_t>(a.segments), a.chi_t, a.theta, outcome.best_fidelity,
                 outcome.restarts_used, c.seed});

  std::cout << std::setprecision(10) << "fidelity " << outcome.best_fidelity << '\n';
  if (c.summary) print_report(metrology_report(replay.final_state, spec));
  return outcome.warning ? kExitNumerical : kExitOk;
}

struct ScanCell {
  int atom_count = 0;
  double theta = 0.0;
  std::optional<MinimalTimeResult> result;
  std::optional<MetrologyReport> report;
  std::string error;
};

int run_scan(const Common& c, const ScanArgs& a) {
  detail::require(!a.atom_counts.empty(), "scan: at least one --n-atoms value is required");
  detail::require(!a.thetas.empty(), "scan: at least one --theta value is required");
  detail::require(a.segments >= 1, "scan: --segments must be at least 1");
  detail::require(a.restarts >= 1, "scan: --restarts must be at least 1");
  detail::require(std::isfinite(c.chi) && c.chi != 0.0, "scan: --chi must be nonzero");
  for (int n : a.atom_counts) detail::require(n >= 2, "scan: every N must be at least 2");
  for (double th : a.thetas) CatSpec{th, 0.0, 2}.validate();

  std::vector<ScanCell> cells;
  for (int n : a.atom_counts) {
    for (double th : a.thetas) cells.push_back({n, th, std::nullopt, std::nullopt, {}});
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      ScanCell& cell = cells[i];
      try {
        const CatSpec spec{cell.theta, 0.0, cell.atom_count};
        TimeScanOptions opt = a.scan;
        for (double* t : {&opt.t_min, &opt.t_max, &opt.coarse_step, &opt.resolution}) *t /= std::abs(c.chi);
        opt.optimize.seed = c.seed;
        opt.optimize.restarts = a.restarts;
        MinimalTimeResult r =
            minimal_time_scan(cell.atom_count, c.chi, static_cast<std::size_t>(a.segments), cat_state(spec), opt);
        if (r.reachable) {
          const PropagationResult replay = evolve_piecewise(cell.atom_count, c.chi, r.outcome.best_schedule,
                                                            optimization_initial_state(cell.atom_count));
          cell.report = metrology_report(replay.final_state, spec);
        } else {
          cell.error = "fidelity floor not reached";
        }
        cell.result = std::move(r);
      } catch (const std::exception& e) {
        cell.error = e.what();
      }
    }
  };
  {
    const int jobs = std::clamp(a.jobs, 1, static_cast<int>(cells.size()));
    std::vector<std::jthread> pool;
    for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
    worker();
  }

  // Output is written here, in cell order, after all workers have joined.
  auto topt = io::detail::open_out(output(c, "topt.csv"));
  auto bounds = io::detail::open_out(output(c, "qcrb.csv"));
  topt << "N,theta,reachable,chiT_opt,fidelity,error\n";
  bounds << "N,theta,fidelity,qfi,qcrb,analytic_bound,relative_deviation\n";
  io::ResultsLedger ledger(output(c, "results.csv"));
  std::map<double, std::vector<ScalingRow>> by_theta;
  int ok = 0;
  for (const ScanCell& cell : cells) {
    const bool reachable = cell.result && cell.result->reachable;
    const double chi_t = reachable ? cell.result->minimal_time * std::abs(c.chi) : 0.0;
    const double f = cell.result ? cell.result->outcome.best_fidelity : 0.0;
    topt << cell.atom_count << ',' << cell.theta << ',' << (reachable ? 1 : 0) << ',' << chi_t << ',' << f << ','
         << cell.error << '\n';
    if (!reachable) continue;
    ++ok;
    ledger.append({cell.atom_count, static_cast<std::size_t>(a.segments), chi_t, cell.theta, f,
                   cell.result->outcome.restarts_used, c.seed});
    const MetrologyReport& r = *cell.report;
    const double bound = 1.0 / (cell.atom_count * std::cos(cell.theta));
    bounds << cell.atom_count << ',' << cell.theta << ',' << r.fidelity << ',' << r.qfi << ',' << r.qcrb << ',' << bound
           << ',' << (r.qcrb - bound) / bound << '\n';
    by_theta[cell.theta].push_back({cell.atom_count, r.qcrb, bound, (r.qcrb - bound) / bound});
    if (c.summary) print_report(r);
  }

  std::cout << std::setprecision(6) << "N,theta,chiT_opt\n";
  for (const ScanCell& cell : cells) {
    std::cout << cell.atom_count << ',' << cell.theta << ',';
    if (cell.result && cell.result->reachable) std::cout << cell.result->minimal_time * std::abs(c.chi) << '\n';
    else std::cout << "nan  # " << cell.error << '\n';
  }
  for (const auto& [theta, rows] : by_theta) {
    if (rows.size() < 2) continue;
    const LinearFit fit = scaling_fit(rows);
    std::cout << "theta " << theta << ": log-log slope of qcrb vs N " << fit.slope << " (R^2 " << fit.r_squared << ")\n";
  }
  return ok > 0 ? kExitOk : kExitNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spin cat state preparation and metrology"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  Common common;

  auto add_common = [&common](CLI::App* sub) {
    sub->add_option("--seed", common.seed, "Seed for the restart streams");
    sub->add_option("--out-dir", common.out_dir, "Directory for CSV outputs");
    sub->add_option("--chi", common.chi, "Nonlinearity chi (adiabatic defaults to -1); times are in units of 1/|chi|")
        ->each([&common](const std::string&) { common.chi_given = true; });
    sub->add_flag("--summary", common.summary, "Print the metrology report to standard output");
  };

  CatArgs cat_args;
  CLI::App* cat = app.add_subcommand("cat", "Build a spin cat state and report its metrology figures");
  cat->add_option("--n-atoms", common.atom_count, "Number of atoms N");
  cat->add_option("--theta", cat_args.theta, "Polar angle theta in radians, [0, pi/2]");
  cat->add_option("--phi", cat_args.phi, "Azimuth phi in radians");
  add_common(cat);

  AdiabaticArgs ad_args;
  CLI::App* ad = app.add_subcommand("adiabatic", "Adiabatic-parameter-fixed sweep from the coherent state");
  ad->add_option("--n-atoms", common.atom_count, "Number of atoms N");
  ad->add_option("--epsilon", ad_args.epsilon, "Adiabatic parameter");
  ad->add_option("--theta", ad_args.thetas, "Target cat angles in radians")->delimiter(',');
  ad->add_option("--omega-start", ad_args.config.omega_start_factor, "Initial Omega in units of N|chi|");
  ad->add_option("--omega-end", ad_args.config.omega_end_factor, "Final Omega in units of N|chi|");
  ad->add_option("--samples", ad_args.config.samples, "Trajectory samples");
  ad->add_option("--tolerance", ad_args.config.propagation.fidelity_tolerance, "Step-halving convergence tolerance");
  add_common(ad);

  OptimizeArgs opt_args;
  CLI::App* opt = app.add_subcommand("optimize", "Optimize a piecewise-constant drive toward a cat state");
  opt->add_option("--n-atoms", common.atom_count, "Number of atoms N");
  opt->add_option("--chi-t", opt_args.chi_t, "Total time chi*T");
  opt->add_option("--segments", opt_args.segments, "Number of constant segments n");
  opt->add_option("--theta", opt_args.theta, "Target cat angle in radians");
  opt->add_option("--restarts", opt_args.restarts, "Number of seeded starts");
  opt->add_option("--threads", opt_args.threads, "Worker threads for the starts");
  opt->add_option("--trace-points", opt_args.trace_points, "Fidelity samples per segment");
  add_common(opt);

  ScanArgs scan_args;
  CLI::App* scan = app.add_subcommand("scan", "Minimal-time and precision scans over N and theta");
  scan->add_option("--n-atoms", scan_args.atom_counts, "Atom numbers, comma separated")->delimiter(',');
  scan->add_option("--theta", scan_args.thetas, "Target angles in radians, comma separated")->delimiter(',');
  scan->add_option("--segments", scan_args.segments, "Number of constant segments n");
  scan->add_option("--restarts", scan_args.restarts, "Seeded starts per probe");
  scan->add_option("--jobs", scan_args.jobs, "Scan cells evaluated concurrently");
  scan->add_option("--floor", scan_args.scan.fidelity_floor, "Fidelity floor");
  scan->add_option("--t-min", scan_args.scan.t_min, "Smallest chi*T probed");
  scan->add_option("--t-max", scan_args.scan.t_max, "Largest chi*T probed");
  scan->add_option("--coarse-step", scan_args.scan.coarse_step, "Spacing of the ascending pass");
  scan->add_option("--resolution", scan_args.scan.resolution, "Resolution of chi*T_opt");
  add_common(scan);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    fs::create_directories(common.out_dir);
    if (*cat) return run_cat(common, cat_args);
    if (*ad) {
      if (!common.chi_given) common.chi = -1.0;
      return run_adiabatic_cmd(common, ad_args);
    }
    if (*opt) return run_optimize(common, opt_args);
    if (*scan) return run_scan(common, scan_args);
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitUsage;
}
