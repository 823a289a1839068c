// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "spincat/adiabatic.hpp"
#include "spincat/control_opt.hpp"
#include "spincat/metrology.hpp"

using namespace spincat;

namespace {

constexpr int kN = 100;
const double kThetas[] = {0.0, kPi / 6, kPi / 4, kPi / 3};
const char* const kThetaNames[] = {"0", "pi/6", "pi/4", "pi/3"};

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    detail << (ok ? "" : "!") << what << "; ";
  }
};

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

// Shared state between criteria.
std::map<double, AdiabaticRun> sweeps;                 // keyed by epsilon
std::map<std::pair<int, int>, MinimalTimeResult> topt;  // (N, theta index)

const AdiabaticRun& sweep(double eps) {
  auto it = sweeps.find(eps);
  if (it == sweeps.end()) {
    std::vector<CatSpec> targets;
    for (double t : kThetas) targets.push_back({t, 0.0, kN});
    it = sweeps.emplace(eps, run_adiabatic(kN, -1.0, eps, targets)).first;
  }
  return it->second;
}

const MinimalTimeResult& scan(int n, int theta_index) {
  const auto key = std::make_pair(n, theta_index);
  auto it = topt.find(key);
  if (it == topt.end()) {
    TimeScanOptions opt;
    opt.optimize.seed = 2024;
    it = topt.emplace(key, minimal_time_scan(n, 1.0, 5, cat_state({kThetas[theta_index], 0.0, n}), opt)).first;
  }
  return it->second;
}

Verdict adiabatic_ghz() {
  Verdict v;
  const double f05 = sweep(0.05).traces[0].best_fidelity;
  const double f10 = sweep(0.1).traces[0].best_fidelity;
  const double f20 = sweep(0.2).traces[0].best_fidelity;
  v.check(f05 >= 0.97, "eps=0.05 F=" + fmt(f05) + " (>=0.97)");
  v.check(f10 >= 0.94, "eps=0.1 F=" + fmt(f10) + " (>=0.94)");
  v.check(std::abs(f20 - 0.74) <= 0.08, "eps=0.2 F=" + fmt(f20) + " (0.74+-0.08)");
  return v;
}

Verdict adiabatic_checkpoints() {
  Verdict v;
  const AdiabaticRun& run = sweep(0.05);
  const double expected[] = {0.0, 0.98, 0.98, 0.91};
  for (int i = 1; i < 4; ++i) {
    const double f = run.traces[i].best_fidelity;
    v.check(std::abs(f - expected[i]) <= 0.03,
            std::string(kThetaNames[i]) + " F=" + fmt(f) + " at t=" + fmt(run.traces[i].best_time));
  }
  bool ordered = true;
  for (int i = 1; i < 4; ++i) ordered = ordered && run.traces[i].best_time < run.traces[i - 1].best_time;
  v.check(ordered, "best times decrease with theta");
  return v;
}

Verdict adiabatic_times() {
  Verdict v;
  const double t05 = sweep(0.05).trajectory.total_time();
  const double t10 = sweep(0.1).trajectory.total_time();
  const double t20 = sweep(0.2).trajectory.total_time();
  v.check(std::abs(t10 / t20 / 2.0 - 1.0) <= 0.15, "T(0.1)/T(0.2)=" + fmt(t10 / t20));
  v.check(std::abs(t05 / t20 / 4.0 - 1.0) <= 0.15, "T(0.05)/T(0.2)=" + fmt(t05 / t20));
  v.check(std::abs(t20 / 0.24 - 1.0) <= 0.2, "T(0.2)=" + fmt(t20));
  v.check(std::abs(t10 / 0.48 - 1.0) <= 0.2, "T(0.1)=" + fmt(t10));
  v.check(std::abs(t05 / 0.96 - 1.0) <= 0.2, "T(0.05)=" + fmt(t05));
  return v;
}

Verdict optimizer_headlines() {
  Verdict v;
  OptimizeOptions opt;
  opt.seed = 7;
  v.check(opt.restarts <= 32, "restarts=" + std::to_string(opt.restarts));
  const StateVector ghz = ghz_state(kN);
  auto best = [&](int n, double t) { return optimize(kN, 1.0, t, n, ghz, opt).best_fidelity; };
  const double a = best(20, 0.25);
  const double b = best(20, 0.15);
  const double c = best(5, 0.15);
  const double d = best(4, 0.15);
  v.check(a >= 0.9995, "n=20 T=0.25 F=" + fmt(a, 6));
  v.check(b >= 0.999, "n=20 T=0.15 F=" + fmt(b, 6));
  v.check(c >= 0.99, "n=5 T=0.15 F=" + fmt(c, 6));
  v.check(d >= 0.88 && d <= 0.95, "n=4 T=0.15 F=" + fmt(d, 6));
  return v;
}

Verdict minimal_time_table() {
  Verdict v;
  const double expected[] = {0.147, 0.134, 0.121, 0.097};
  double previous = 1e300;
  bool decreasing = true;
  for (int i = 0; i < 4; ++i) {
    const MinimalTimeResult& r = scan(kN, i);
    v.check(r.reachable && std::abs(r.minimal_time - expected[i]) <= 0.02,
            std::string(kThetaNames[i]) + " T=" + fmt(r.minimal_time, 3) + " F=" + fmt(r.outcome.best_fidelity));
    decreasing = decreasing && r.minimal_time < previous;
    previous = r.minimal_time;
  }
  v.check(decreasing, "decreasing in theta");
  return v;
}

Verdict scaling_law() {
  Verdict v;
  std::vector<double> x;
  std::vector<double> y;
  for (int n : {40, 60, 100, 160, 200}) {
    const MinimalTimeResult& r = scan(n, 0);
    v.check(r.reachable, "N=" + std::to_string(n) + " T=" + fmt(r.minimal_time, 3));
    x.push_back(1.0 / std::sqrt(double(n)));
    y.push_back(r.minimal_time);
  }
  const LinearFit fit = fit_line(x, y);
  v.check(fit.r_squared >= 0.95, "R2=" + fmt(fit.r_squared) + " slope=" + fmt(fit.slope, 3));
  return v;
}

Verdict metrology() {
  Verdict v;
  for (int i = 0; i < 4; ++i) {
    std::map<int, StateVector> prepared;
    for (int n : {40, 100}) {
      const MinimalTimeResult& r = scan(n, i);
      const StateVector psi =
          evolve_piecewise(n, 1.0, r.outcome.best_schedule, optimization_initial_state(n)).final_state;
      const double f = fidelity(psi, cat_state({kThetas[i], 0.0, n}));
      if (f < 0.99) v.check(false, std::string(kThetaNames[i]) + " N=" + std::to_string(n) + " F=" + fmt(f));
      prepared.emplace(n, psi);
    }
    const auto rows = scaling_scan(prepared, kThetas[i]);
    for (const ScalingRow& row : rows) {
      v.check(std::abs(row.relative_deviation) <= 0.05,
              std::string(kThetaNames[i]) + " N=" + std::to_string(row.atom_count) + " dev=" + fmt(row.relative_deviation));
    }
    const double slope = scaling_fit(rows).slope;
    v.check(slope >= -1.05 && slope <= -0.95, std::string(kThetaNames[i]) + " slope=" + fmt(slope, 3));
  }
  return v;
}

Verdict property_suite() {
  Verdict v;
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-2.0, 2.0);

  // Norm drift and parity over random piecewise evolutions and the sweeps.
  double norm = 0.0;
  double parity = 0.0;
  for (int n : {10, 40, 100}) {
    ControlSchedule s{n, 0.5, {}};
    for (int k = 0; k < 12; ++k) s.lambdas.push_back(u(rng));
    std::vector<double> times;
    for (int k = 1; k <= 50; ++k) times.push_back(0.01 * k);
    const PropagationResult r = evolve_piecewise(n, 1.0, s, optimization_initial_state(n), times);
    norm = std::max(norm, r.norm_drift);
    for (const Checkpoint& c : r.checkpoints) parity = std::max(parity, std::abs(parity_expectation(c.state) - 1.0));
  }
  for (const auto& [eps, run] : sweeps) {
    norm = std::max(norm, run.norm_drift);
    parity = std::max(parity, run.max_parity_deviation);
  }
  v.check(norm <= 1e-10, "norm drift " + sci(norm));
  v.check(parity <= 1e-6, "parity drift " + sci(parity));

  // Adjoint gradient against central differences at N = 20.
  double grad_err = 0.0;
  for (int rep = 0; rep < 5; ++rep) {
    ControlSchedule s{20, 0.3, {}};
    for (int k = 0; k < 6; ++k) s.lambdas.push_back(u(rng));
    const StateVector target = cat_state({kThetas[rep % 4], 0.0, 20});
    const std::vector<double> g = gradient(s, 1.0, target);
    double diff = 0.0;
    double ref = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
      ControlSchedule plus = s;
      ControlSchedule minus = s;
      plus.lambdas[k] += 1e-5;
      minus.lambdas[k] -= 1e-5;
      const double fd = (objective(plus, 1.0, target) - objective(minus, 1.0, target)) / 2e-5;
      diff += (g[k] - fd) * (g[k] - fd);
      ref += fd * fd;
    }
    grad_err = std::max(grad_err, std::sqrt(diff / ref));
  }
  v.check(grad_err <= 1e-6, "gradient rel err " + sci(grad_err));

  // Even plus odd block spectra reproduce the full spectrum.
  double spectral = 0.0;
  for (int n : {7, 30, 100}) {
    for (double omega : {0.0, 0.5 * n, 2.0 * n}) {
      const Hamiltonian h = build_hamiltonian(n, -1.0, omega);
      auto eig = [](const RealMatrix& m) {
        const RealVector e = Eigen::SelfAdjointEigenSolver<RealMatrix>(m).eigenvalues();
        return std::vector<double>(e.data(), e.data() + e.size());
      };
      std::vector<double> joint = eig(even_parity_block(h));
      const std::vector<double> odd = eig(odd_parity_block(h));
      joint.insert(joint.end(), odd.begin(), odd.end());
      std::sort(joint.begin(), joint.end());
      const std::vector<double> full = eig(h.matrix);
      for (std::size_t k = 0; k < full.size(); ++k)
        spectral = std::max(spectral, std::abs(joint[k] - full[k]) / std::max(1.0, std::abs(full.front())));
    }
  }
  v.check(spectral <= 1e-10, "spectral mismatch " + sci(spectral));

  // Piecewise evolution against RK4 on dense matrices for N <= 6.
  double ode = 0.0;
  for (int n = 1; n <= 6; ++n) {
    const ControlSchedule s{n, 0.8, {u(rng), u(rng), u(rng)}};
    const oracle::Ops ops = oracle::spin_ops(n);
    oracle::CVec ref = oracle::coherent(n, kPi / 2, 0.0);
    for (double lambda : s.lambdas) {
      const oracle::CMat h = ops.jz * ops.jz + (lambda * n / 2.0) * ops.jx;
      ref = oracle::rk4(h, ref, s.segment_duration(), 4000);
    }
    const StateVector psi = evolve_piecewise(n, 1.0, s, optimization_initial_state(n)).final_state;
    ode = std::max(ode, oracle::phase_aligned_distance(psi.amplitudes(), ref));
  }
  v.check(ode <= 1e-6, "RK4 distance " + sci(ode));

  // 4 Var(Jz) / N^2 against cos^2(theta) for analytic cats.
  double variance = 0.0;
  for (int n : {20, 50, 100}) {
    for (double t : kThetas) {
      const double r = 4.0 * jz_moments(cat_state({t, 0.0, n})).variance() / (double(n) * n);
      variance = std::max(variance, std::abs(r - std::cos(t) * std::cos(t)));
    }
  }
  v.check(variance <= 0.03, "variance law |diff| " + fmt(variance));
  return v;
}

}  // namespace

int main() {
  set_warning_handler([](const std::string&) {});
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"adiabatic GHZ fidelity", adiabatic_ghz},
      {"adiabatic multi-theta checkpoints", adiabatic_checkpoints},
      {"adiabatic total times", adiabatic_times},
      {"optimizer headline fidelities", optimizer_headlines},
      {"minimal-time table", minimal_time_table},
      {"scaling law", scaling_law},
      {"metrology", metrology},
      {"property suite", property_suite},
  };
  bool all = true;
  int index = 1;
  for (const auto& [name, fn] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v.check(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    all = all && v.pass;
    std::printf("criterion %d %s: %s [%s] (%.1fs)\n", index++, name.c_str(), v.pass ? "PASS" : "FAIL",
                v.detail.str().c_str(), secs);
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
