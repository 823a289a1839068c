#pragma once

// Phase-estimation figures of merit for pure states under U(phi) = exp(-i phi Jz).

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include "spincat/error.hpp"
#include "spincat/fit.hpp"
#include "spincat/spin_algebra.hpp"

namespace spincat {

/// |<a|b>|^2.
inline double fidelity(const StateVector& a, const StateVector& b) {
  detail::require(a.dim() == b.dim(), "fidelity: dimension mismatch");
  return std::min(1.0, std::norm(overlap(a, b)));
}

/// F^Q = 4 Var(Jz), exact for pure states under Jz phase encoding.
inline double qfi_phase_encoding(const StateVector& psi) { return 4.0 * jz_moments(psi).variance(); }

/// Delta phi_Q = 1/sqrt(F^Q); +infinity when F^Q = 0.
inline double qcrb(double qfi) {
  detail::require(std::isfinite(qfi) && qfi >= 0.0, "qcrb: quantum Fisher information must be finite and non-negative");
  if (qfi == 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / std::sqrt(qfi);
}

struct MetrologyReport {
  int atom_count = 0;
  double theta = 0.0;
  double fidelity = 0.0;
  double qfi = 0.0;
  double qcrb = 0.0;
  double parity = 0.0;
  double variance_jz = 0.0;
  double mean_jz = 0.0;
};

/// Report for `state`. Fidelity is taken against `target` when one is given
/// (theta is then the target's); otherwise it is left at 1 for an analytic state.
inline MetrologyReport metrology_report(const StateVector& state, const std::optional<CatSpec>& target = std::nullopt) {
  const JzMoments moments = jz_moments(state);
  MetrologyReport r;
  r.atom_count = state.atom_count();
  r.variance_jz = moments.variance();
  r.mean_jz = moments.mean;
  r.qfi = 4.0 * r.variance_jz;
  r.qcrb = qcrb(r.qfi);
  r.parity = parity_expectation(state);
  if (target) {
    r.theta = target->theta;
    r.fidelity = fidelity(state, cat_state(*target));
  } else {
    r.fidelity = 1.0;
  }
  return r;
}

struct ScalingRow {
  int atom_count = 0;
  double qcrb = 0.0;
  double analytic_bound = 0.0;  ///< 1/(N cos theta)
  double relative_deviation = 0.0;
};

/// Compares Delta phi_Q of each prepared state with 1/(N cos theta). Rows are
/// ordered by N.
inline std::vector<ScalingRow> scaling_scan(const std::map<int, StateVector>& prepared, double theta) {
  detail::require(std::isfinite(theta) && theta >= 0.0 && theta < kPi / 2, "scaling_scan: theta must lie in [0, pi/2)");
  std::vector<ScalingRow> rows;
  rows.reserve(prepared.size());
  for (const auto& [n, state] : prepared) {
    detail::require(state.atom_count() == n, "scaling_scan: state atom count does not match its key");
    ScalingRow row;
    row.atom_count = n;
    row.qcrb = qcrb(qfi_phase_encoding(state));
    row.analytic_bound = 1.0 / (n * std::cos(theta));
    row.relative_deviation = (row.qcrb - row.analytic_bound) / row.analytic_bound;
    rows.push_back(row);
  }
  return rows;
}

/// Least-squares slope of log(Delta phi_Q) against log(N).
inline LinearFit scaling_fit(const std::vector<ScalingRow>& rows) {
  std::vector<double> x;
  std::vector<double> y;
  for (const ScalingRow& r : rows) {
    x.push_back(std::log(static_cast<double>(r.atom_count)));
    y.push_back(std::log(r.qcrb));
  }
  return fit_line(x, y);
}

}  // namespace spincat
