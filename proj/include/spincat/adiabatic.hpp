#pragma once

// Adiabatic-parameter-fixed sweeping with chi < 0.
//
// The drive starts well above the critical point Omega_c = N|chi| and is swept
// toward zero at the instantaneous rate
//
//   v = k * epsilon * (E1 - E3)^2 / |<phi1|Jx|phi3>|,
//
// where phi1 and phi3 are the two lowest even-parity eigenstates. The odd
// state sitting between them in the full spectrum never couples to the even
// ground state, which is what makes the passage through the degenerate regime
// symmetry protected.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "spincat/controls.hpp"
#include "spincat/error.hpp"
#include "spincat/parity.hpp"
#include "spincat/propagation.hpp"
#include "spincat/spin_algebra.hpp"

namespace spincat {

/// Even-parity block B^T H B in the parity_basis ordering.
inline RealMatrix even_parity_block(const Hamiltonian& h) {
  require_parity_symmetric(h.matrix);
  const RealMatrix b = parity_basis(h.atom_count, Parity::even);
  return b.transpose() * h.matrix * b;
}

inline RealMatrix odd_parity_block(const Hamiltonian& h) {
  require_parity_symmetric(h.matrix);
  const RealMatrix b = parity_basis(h.atom_count, Parity::odd);
  return b.transpose() * h.matrix * b;
}

struct GapData {
  double omega = 0.0;
  double e1 = 0.0;        ///< even-parity ground energy
  double e3 = 0.0;        ///< next even-parity energy
  double coupling = 0.0;  ///< |<phi1|Jx|phi3>|

  [[nodiscard]] double gap() const { return e3 - e1; }
};

/// Two lowest even-parity levels of chi Jz^2 + Omega Jx and the Jx matrix
/// element between them.
inline GapData gap_data(int atom_count, double chi, double omega) {
  detail::require(atom_count >= 2, "gap_data: N must be at least 2");
  const RealMatrix basis = parity_basis(atom_count, Parity::even);
  const Hamiltonian h = build_hamiltonian(atom_count, chi, omega);
  const RealMatrix block = basis.transpose() * h.matrix * basis;
  const Eigensystem es = tridiagonal_eigensystem(block.diagonal(), block.diagonal(-1));
  const RealVector phi1 = basis * es.vectors.col(0);
  const RealVector phi3 = basis * es.vectors.col(1);
  GapData g{omega, es.values[0], es.values[1], std::abs(phi1.dot(jx_real(atom_count) * phi3))};
  const double scale = std::max({1.0, std::abs(g.e1), std::abs(g.e3)});
  if (g.e3 - g.e1 <= 1e-13 * scale) {
    throw NumericalError("gap_data: even-parity levels are degenerate at Omega = " + std::to_string(omega));
  }
  return g;
}

/// Raw sweep rate epsilon (E1 - E3)^2 / |<phi1|Jx|phi3>|. Returns +infinity
/// when the coupling falls below 1e-14.
inline double sweep_rate(const GapData& gap, double epsilon) {
  detail::require(std::isfinite(epsilon) && epsilon > 0.0, "sweep_rate: epsilon must be positive");
  if (gap.coupling < 1e-14) return std::numeric_limits<double>::infinity();
  const double g = gap.e1 - gap.e3;
  return epsilon * g * g / gap.coupling;
}

struct AdiabaticConfig {
  /// Omega(0) in units of N|chi|.
  double omega_start_factor = 2.0;
  /// Sweep end point in units of N|chi|.
  double omega_end_factor = 1e-3;
  /// Multiplies the raw rate; 2 reproduces the reported sweep durations and
  /// fidelities for a given epsilon.
  double rate_normalization = 2.0;
  /// Omega samples between Omega(0) and Omega_end; also the trajectory size.
  int samples = 2001;
  /// Sweeps longer than this (units of 1/|chi|) are reported as failures.
  double max_time = 1e3;
  /// Sign of the Jx coefficient actually applied. With -1 the instantaneous
  /// ground states have non-negative amplitudes and match the phi = 0 cats.
  double drive_sign = -1.0;
  SweptOptions propagation{};
};

/// Omega(t) swept from omega_start down to omega_end. Time is obtained as
/// t(Omega) = integral of dOmega / v(Omega) on a uniform Omega grid
/// (trapezoid rule), since v depends on Omega alone.
inline SweepTrajectory generate_trajectory(int atom_count, double chi, double epsilon, double omega_start, double omega_end,
                                           const AdiabaticConfig& config = {}) {
  detail::require(atom_count >= 2, "generate_trajectory: N must be at least 2");
  detail::require(chi < 0.0, "generate_trajectory: the cat sweep requires chi < 0");
  detail::require(std::isfinite(epsilon) && epsilon > 0.0, "generate_trajectory: epsilon must be positive");
  detail::require(std::isfinite(omega_start) && omega_end >= 0.0 && omega_start > omega_end,
                  "generate_trajectory: need omega_start > omega_end >= 0");
  detail::require(config.samples >= 3, "generate_trajectory: at least three samples are required");
  detail::require(config.rate_normalization > 0.0, "generate_trajectory: rate normalization must be positive");

  const int m = config.samples;
  const double step = (omega_start - omega_end) / (m - 1);
  std::vector<double> inverse_rate(m);
  SweepTrajectory traj;
  traj.epsilon = epsilon;
  traj.drive_sign = config.drive_sign;
  traj.omegas.resize(m);
  for (int i = 0; i < m; ++i) {
    const double omega = i + 1 == m ? omega_end : omega_start - step * i;
    traj.omegas[i] = omega;
    const double rate = config.rate_normalization * sweep_rate(gap_data(atom_count, chi, omega), epsilon);
    inverse_rate[i] = std::isinf(rate) ? 0.0 : 1.0 / rate;
  }
  traj.times.resize(m);
  traj.times[0] = 0.0;
  for (int i = 1; i < m; ++i) {
    const double dt = 0.5 * (inverse_rate[i - 1] + inverse_rate[i]) * (traj.omegas[i - 1] - traj.omegas[i]);
    if (!(dt > 0.0)) {
      throw NumericalError("generate_trajectory: sweep rate diverges near Omega = " + std::to_string(traj.omegas[i]));
    }
    traj.times[i] = traj.times[i - 1] + dt;
    if (traj.times[i] > config.max_time) {
      throw NumericalError("generate_trajectory: sweep did not reach Omega_end within max_time = " +
                           std::to_string(config.max_time));
    }
  }
  return traj;
}

/// Trajectory with the configured start and end points for this N and chi.
inline SweepTrajectory generate_trajectory(int atom_count, double chi, double epsilon, const AdiabaticConfig& config = {}) {
  const double scale = atom_count * std::abs(chi);
  return generate_trajectory(atom_count, chi, epsilon, config.omega_start_factor * scale, config.omega_end_factor * scale,
                             config);
}

struct TargetTrace {
  CatSpec target;
  double best_fidelity = 0.0;
  double best_time = 0.0;
  std::vector<double> fidelity;  ///< F(t) at every trajectory sample
};

struct AdiabaticRun {
  SweepTrajectory trajectory;
  std::vector<TargetTrace> traces;
  double max_parity_deviation = 0.0;  ///< max |<P> - 1| along the run
  double norm_drift = 0.0;
  StateVector final_state;
};

/// Ground state of chi Jz^2 + drive_sign Omega Jx for Omega >> N|chi|: the
/// coherent state along -drive_sign x.
inline StateVector sweep_initial_state(int atom_count, double drive_sign) {
  return spin_coherent_state(atom_count, kPi / 2, drive_sign > 0 ? kPi : 0.0);
}

/// Sweeps from the large-Omega coherent state and tracks F(t) against every
/// target. Returns the best fidelity per target and when it occurred.
inline AdiabaticRun run_adiabatic(int atom_count, double chi, double epsilon, const std::vector<CatSpec>& targets,
                                  const AdiabaticConfig& config = {}) {
  for (const CatSpec& t : targets) {
    t.validate();
    detail::require(t.atom_count == atom_count, "run_adiabatic: target built for a different N");
  }
  SweepTrajectory traj = generate_trajectory(atom_count, chi, epsilon, config);
  const StateVector psi0 = sweep_initial_state(atom_count, config.drive_sign);
  PropagationResult evolved = evolve_swept(atom_count, chi, traj, psi0, traj.times, config.propagation);

  std::vector<StateVector> target_states;
  target_states.reserve(targets.size());
  for (const CatSpec& t : targets) target_states.push_back(cat_state(t));

  AdiabaticRun run{std::move(traj), {}, 0.0, evolved.norm_drift, evolved.final_state};
  for (std::size_t k = 0; k < targets.size(); ++k) {
    TargetTrace trace{targets[k], -1.0, 0.0, {}};
    trace.fidelity.reserve(evolved.checkpoints.size());
    for (const Checkpoint& cp : evolved.checkpoints) {
      const double f = std::norm(overlap(target_states[k], cp.state));
      trace.fidelity.push_back(f);
      if (f > trace.best_fidelity) {
        trace.best_fidelity = f;
        trace.best_time = cp.time;
      }
    }
    run.traces.push_back(std::move(trace));
  }
  for (const Checkpoint& cp : evolved.checkpoints) {
    run.max_parity_deviation = std::max(run.max_parity_deviation, std::abs(parity_expectation(cp.state) - 1.0));
  }
  return run;
}

}  // namespace spincat
