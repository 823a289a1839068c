#pragma once

// Control descriptions consumed by the propagators: the piecewise-constant
// twist-and-turn schedule and the sampled adiabatic sweep.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "spincat/error.hpp"

namespace spincat {

/// Piecewise-constant drive Omega(t) = Lambda^(k) N chi / 2 on segment k,
/// which is active on [(k-1)T/n, kT/n). Times are in units of 1/|chi|.
struct ControlSchedule {
  int atom_count = 1;
  double total_time = 0.0;
  std::vector<double> lambdas;

  [[nodiscard]] std::size_t segments() const { return lambdas.size(); }
  [[nodiscard]] double segment_duration() const { return total_time / static_cast<double>(lambdas.size()); }
  /// Start time of segment k (0-based); segment_start(n) == total_time.
  [[nodiscard]] double segment_start(std::size_t k) const {
    return k == lambdas.size() ? total_time : total_time * static_cast<double>(k) / static_cast<double>(lambdas.size());
  }
  /// Rabi frequency of segment k for twisting strength chi.
  [[nodiscard]] double omega(std::size_t k, double chi) const { return lambdas[k] * atom_count * chi / 2.0; }

  /// Throws InvalidArgument for n = 0, T <= 0, non-finite or out-of-bound
  /// amplitudes. `lambda_max <= 0` disables the bound check.
  void validate(double lambda_max = 0.0) const {
    detail::require(atom_count >= 1, "ControlSchedule: atom count must be positive");
    detail::require(!lambdas.empty(), "ControlSchedule: at least one segment is required");
    detail::require(std::isfinite(total_time) && total_time > 0.0, "ControlSchedule: total time must be positive");
    for (std::size_t k = 0; k < lambdas.size(); ++k) {
      detail::require(std::isfinite(lambdas[k]), "ControlSchedule: non-finite amplitude in segment " + std::to_string(k + 1));
      if (lambda_max > 0.0) {
        detail::require(std::abs(lambdas[k]) <= lambda_max,
                        "ControlSchedule: |Lambda| exceeds bound in segment " + std::to_string(k + 1));
      }
    }
  }
};

/// Sampled sweep (t_i, Omega_i). Between samples Omega is linear in t. The
/// Hamiltonian applies drive_sign * Omega(t) as the Jx coefficient.
struct SweepTrajectory {
  double epsilon = 0.0;
  double drive_sign = 1.0;
  std::vector<double> times;
  std::vector<double> omegas;

  [[nodiscard]] std::size_t size() const { return times.size(); }
  [[nodiscard]] double total_time() const { return times.empty() ? 0.0 : times.back(); }

  /// Omega at time t by linear interpolation; clamps outside the sample range.
  [[nodiscard]] double omega_at(double t) const;

  void validate() const {
    detail::require(times.size() == omegas.size(), "SweepTrajectory: times and omegas differ in length");
    detail::require(times.size() >= 2, "SweepTrajectory: at least two samples are required");
    detail::require(times.front() == 0.0, "SweepTrajectory: first sample must be at t = 0");
    for (std::size_t i = 0; i < times.size(); ++i) {
      detail::require(std::isfinite(times[i]) && std::isfinite(omegas[i]), "SweepTrajectory: non-finite sample");
      if (i > 0) detail::require(times[i] > times[i - 1], "SweepTrajectory: sample times must be strictly increasing");
    }
  }
};

inline double SweepTrajectory::omega_at(double t) const {
  if (t <= times.front()) return omegas.front();
  if (t >= times.back()) return omegas.back();
  std::size_t lo = 0;
  std::size_t hi = times.size() - 1;
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    (times[mid] <= t ? lo : hi) = mid;
  }
  const double w = (t - times[lo]) / (times[hi] - times[lo]);
  return omegas[lo] + w * (omegas[hi] - omegas[lo]);
}

}  // namespace spincat
