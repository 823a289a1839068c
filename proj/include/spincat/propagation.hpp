#pragma once

// Time evolution under the Bose-Josephson Hamiltonian H = chi Jz^2 + Omega Jx.
//
// Constant-H steps are exact: psi <- V exp(-i Lambda dt) V^T psi with V the
// eigenvectors of the real symmetric (tridiagonal) H. Piecewise schedules do
// one eigendecomposition per segment. Continuous sweeps are approximated by
// midpoint-frozen steps whose size is halved until the final state converges.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>
#include <vector>

#include "spincat/controls.hpp"
#include "spincat/error.hpp"
#include "spincat/spin_algebra.hpp"

namespace spincat {

struct Hamiltonian {
  int atom_count = 1;
  double chi = 1.0;
  double omega = 0.0;
  RealMatrix matrix;

  /// Diagonal chi m^2.
  [[nodiscard]] RealVector diagonal() const { return matrix.diagonal(); }
  /// First sub-diagonal Omega <m+1|Jx|m>.
  [[nodiscard]] RealVector subdiagonal() const {
    const Eigen::Index d = matrix.rows();
    RealVector sub(d > 0 ? d - 1 : 0);
    for (Eigen::Index i = 0; i + 1 < d; ++i) sub[i] = matrix(i + 1, i);
    return sub;
  }
};

inline Hamiltonian build_hamiltonian(int atom_count, double chi, double omega) {
  detail::require(atom_count >= 1, "build_hamiltonian: N must be at least 1");
  detail::require(std::isfinite(chi) && std::isfinite(omega), "build_hamiltonian: chi and omega must be finite");
  Hamiltonian h{atom_count, chi, omega, omega * jx_real(atom_count)};
  const RealVector m = jz_diagonal(atom_count);
  h.matrix.diagonal() = chi * m.array().square().matrix();
  return h;
}

/// Eigenpairs of a real symmetric Hamiltonian, ascending.
struct Eigensystem {
  RealVector values;
  RealMatrix vectors;
};

/// Diagonalizes a real symmetric tridiagonal matrix given by its diagonal and
/// first sub-diagonal.
inline Eigensystem tridiagonal_eigensystem(const RealVector& diag, const RealVector& sub) {
  // Eigen's tridiagonal QR does not rescale its input and can stall on
  // entries of order 1e3, so work with the matrix divided by its largest entry.
  double scale = std::max(diag.cwiseAbs().maxCoeff(), sub.size() > 0 ? sub.cwiseAbs().maxCoeff() : 0.0);
  if (!(scale > 0.0)) scale = 1.0;
  Eigen::SelfAdjointEigenSolver<RealMatrix> solver;
  solver.computeFromTridiagonal(diag / scale, sub / scale, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) throw NumericalError("tridiagonal eigensolver failed to converge");
  return {solver.eigenvalues() * scale, solver.eigenvectors()};
}

inline Eigensystem eigensystem(const Hamiltonian& h) { return tridiagonal_eigensystem(h.diagonal(), h.subdiagonal()); }

/// V exp(-i values dt) V^T psi for a real eigenbasis.
inline ComplexVector apply_evolution(const Eigensystem& es, const ComplexVector& psi, double dt) {
  const RealVector re = es.vectors.transpose() * psi.real();
  const RealVector im = es.vectors.transpose() * psi.imag();
  RealVector rot_re(re.size());
  RealVector rot_im(re.size());
  for (Eigen::Index a = 0; a < re.size(); ++a) {
    const double c = std::cos(es.values[a] * dt);
    const double s = -std::sin(es.values[a] * dt);
    rot_re[a] = c * re[a] - s * im[a];
    rot_im[a] = c * im[a] + s * re[a];
  }
  ComplexVector out(psi.size());
  out.real() = es.vectors * rot_re;
  out.imag() = es.vectors * rot_im;
  return out;
}

inline StateVector propagate_const(const Hamiltonian& h, const StateVector& psi, double dt) {
  detail::require(h.matrix.rows() == psi.dim(), "propagate_const: dimension mismatch between H and psi");
  detail::require(std::isfinite(dt) && dt >= 0.0, "propagate_const: dt must be finite and non-negative");
  if (dt == 0.0) return psi;
  return StateVector(psi.atom_count(), apply_evolution(eigensystem(h), psi.amplitudes(), dt));
}

/// General Hermitian overload, used for arbitrary generators.
inline StateVector propagate_const(const ComplexMatrix& h, const StateVector& psi, double dt) {
  detail::require(h.rows() == psi.dim() && h.cols() == psi.dim(), "propagate_const: dimension mismatch between H and psi");
  detail::require(std::isfinite(dt) && dt >= 0.0, "propagate_const: dt must be finite and non-negative");
  if (dt == 0.0) return psi;
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(h);
  if (solver.info() != Eigen::Success) throw NumericalError("propagate_const: eigensolver failed");
  const ComplexMatrix& v = solver.eigenvectors();
  ComplexVector coeffs = v.adjoint() * psi.amplitudes();
  for (Eigen::Index a = 0; a < coeffs.size(); ++a) coeffs[a] *= std::polar(1.0, -solver.eigenvalues()[a] * dt);
  return StateVector(psi.atom_count(), v * coeffs);
}

struct Checkpoint {
  double time = 0.0;
  StateVector state;
};

struct PropagationResult {
  StateVector final_state;
  std::vector<Checkpoint> checkpoints;  // same order as the requested times
  double norm_drift = 0.0;              // max |1 - ||psi||^2| over all steps
};

namespace detail {

/// Walks a sequence of constant-H steps, capturing checkpoint states on the way.
class CheckpointStepper {
 public:
  CheckpointStepper(const StateVector& psi0, const std::vector<double>& checkpoint_times, double total_time)
      : atom_count_(psi0.atom_count()), psi_(psi0.amplitudes()), times_(checkpoint_times), order_(checkpoint_times.size()) {
    for (double t : times_) {
      require(std::isfinite(t) && t >= 0.0 && t <= total_time, "checkpoint time outside [0, T]");
    }
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::stable_sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) { return times_[a] < times_[b]; });
    captured_.resize(times_.size());
  }

  /// Evolves from the current time to `t_end` under the given eigensystem.
  /// Checkpoints in [now, t_end) are taken from the state at the step start.
  void step(const Eigensystem& es, double t_end) {
    while (next_ < order_.size() && times_[order_[next_]] < t_end) {
      const double t = times_[order_[next_]];
      const double dt = t - now_;
      captured_[order_[next_]] = dt > 0.0 ? apply_evolution(es, psi_, dt) : psi_;
      ++next_;
    }
    psi_ = apply_evolution(es, psi_, t_end - now_);
    now_ = t_end;
    drift_ = std::max(drift_, std::abs(1.0 - psi_.squaredNorm()));
  }

  PropagationResult finish() {
    for (; next_ < order_.size(); ++next_) captured_[order_[next_]] = psi_;
    PropagationResult result{StateVector(atom_count_, psi_), {}, drift_};
    result.checkpoints.reserve(times_.size());
    for (std::size_t i = 0; i < times_.size(); ++i) result.checkpoints.push_back({times_[i], StateVector(atom_count_, captured_[i])});
    return result;
  }

  [[nodiscard]] const ComplexVector& state() const { return psi_; }

 private:
  int atom_count_;
  ComplexVector psi_;
  std::vector<double> times_;
  std::vector<std::size_t> order_;
  std::vector<ComplexVector> captured_;
  std::size_t next_ = 0;
  double now_ = 0.0;
  double drift_ = 0.0;
};

}  // namespace detail

/// Evolves psi0 through the schedule. Segment k uses H = chi Jz^2 + Omega_k Jx
/// with Omega_k = Lambda^(k) N chi / 2.
inline PropagationResult evolve_piecewise(int atom_count, double chi, const ControlSchedule& schedule, const StateVector& psi0,
                                          const std::vector<double>& checkpoint_times = {}) {
  schedule.validate();
  detail::require(schedule.atom_count == atom_count, "evolve_piecewise: schedule built for a different N");
  detail::require(psi0.atom_count() == atom_count, "evolve_piecewise: initial state has a different N");
  detail::CheckpointStepper stepper(psi0, checkpoint_times, schedule.total_time);
  const RealVector jz2 = jz_diagonal(atom_count).array().square().matrix();
  const RealVector jx_sub = jx_real(atom_count).diagonal(-1);
  for (std::size_t k = 0; k < schedule.segments(); ++k) {
    const Eigensystem es = tridiagonal_eigensystem(chi * jz2, schedule.omega(k, chi) * jx_sub);
    stepper.step(es, schedule.segment_start(k + 1));
  }
  return stepper.finish();
}

struct SweptOptions {
  double fidelity_tolerance = 1e-6;  ///< Allowed 1 - |<psi_h|psi_h/2>|^2.
  int initial_substeps = 1;          ///< Frozen steps per sample interval on the first pass.
  int max_substeps = 1 << 10;
};

namespace detail {

inline PropagationResult evolve_swept_fixed(int atom_count, double chi, const SweepTrajectory& trajectory, const StateVector& psi0,
                                            const std::vector<double>& checkpoint_times, int substeps) {
  CheckpointStepper stepper(psi0, checkpoint_times, trajectory.total_time());
  const RealVector jz2 = jz_diagonal(atom_count).array().square().matrix();
  const RealVector jx_sub = jx_real(atom_count).diagonal(-1);
  for (std::size_t i = 0; i + 1 < trajectory.size(); ++i) {
    const double t0 = trajectory.times[i];
    const double t1 = trajectory.times[i + 1];
    const double w0 = trajectory.omegas[i];
    const double w1 = trajectory.omegas[i + 1];
    for (int j = 0; j < substeps; ++j) {
      const double frac = (j + 0.5) / substeps;
      const double omega = trajectory.drive_sign * (w0 + frac * (w1 - w0));
      const double t_end = (j + 1 == substeps) ? t1 : t0 + (t1 - t0) * (j + 1) / substeps;
      stepper.step(tridiagonal_eigensystem(chi * jz2, omega * jx_sub), t_end);
    }
  }
  return stepper.finish();
}

}  // namespace detail

/// Evolves psi0 along a sampled sweep. Substeps per sample interval double
/// until two consecutive passes agree to `options.fidelity_tolerance`; the
/// finer pass is returned.
inline PropagationResult evolve_swept(int atom_count, double chi, const SweepTrajectory& trajectory, const StateVector& psi0,
                                      const std::vector<double>& checkpoint_times = {}, const SweptOptions& options = {}) {
  trajectory.validate();
  detail::require(psi0.atom_count() == atom_count, "evolve_swept: initial state has a different N");
  detail::require(options.initial_substeps >= 1 && options.max_substeps >= options.initial_substeps,
                  "evolve_swept: invalid substep limits");
  int substeps = options.initial_substeps;
  PropagationResult coarse = detail::evolve_swept_fixed(atom_count, chi, trajectory, psi0, checkpoint_times, substeps);
  while (substeps * 2 <= options.max_substeps) {
    substeps *= 2;
    PropagationResult fine = detail::evolve_swept_fixed(atom_count, chi, trajectory, psi0, checkpoint_times, substeps);
    const double change = 1.0 - std::norm(overlap(coarse.final_state, fine.final_state));
    if (change < options.fidelity_tolerance) return fine;
    coarse = std::move(fine);
  }
  throw NumericalError("evolve_swept: step halving did not converge within max_substeps");
}

}  // namespace spincat
