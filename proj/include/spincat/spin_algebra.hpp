#pragma once

// Collective spin of N two-level atoms in the Dicke basis |J,m>, J = N/2.
// Basis index i corresponds to m = i - J, so index 0 is m = -J and the last
// index is m = +J.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "spincat/error.hpp"
#include "spincat/log.hpp"

namespace spincat {

using Complex = std::complex<double>;
using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;

inline constexpr double kPi = std::numbers::pi;

/// Number of atoms N together with the derived spin length J = N/2.
struct Spin {
  int atom_count;

  [[nodiscard]] double j() const { return 0.5 * atom_count; }
  [[nodiscard]] Eigen::Index dim() const { return atom_count + 1; }
  [[nodiscard]] double m(Eigen::Index index) const { return static_cast<double>(index) - j(); }
};

/// Pure state of the collective spin. Always unit norm, length N + 1.
class StateVector {
 public:
  /// Norm tolerance accepted at construction. Propagated states carry
  /// round-off of order 1e-13; constructors in this library hit 1e-15.
  static constexpr double kNormTolerance = 1e-10;

  StateVector(int atom_count, ComplexVector amplitudes) : atom_count_(atom_count), amplitudes_(std::move(amplitudes)) {
    detail::require(atom_count_ >= 1, "StateVector: atom count must be positive");
    detail::require(amplitudes_.size() == atom_count_ + 1,
                    "StateVector: expected " + std::to_string(atom_count_ + 1) + " amplitudes, got " +
                        std::to_string(amplitudes_.size()));
    const double norm2 = amplitudes_.squaredNorm();
    detail::require(std::abs(norm2 - 1.0) <= kNormTolerance,
                    "StateVector: amplitudes are not normalized (norm^2 = " + std::to_string(norm2) + ")");
  }

  /// Normalizes `amplitudes` before wrapping them.
  static StateVector normalized(int atom_count, const ComplexVector& amplitudes) {
    const double norm = amplitudes.norm();
    detail::require(norm > 0.0 && std::isfinite(norm), "StateVector: cannot normalize a zero or non-finite vector");
    return StateVector(atom_count, amplitudes / norm);
  }

  [[nodiscard]] int atom_count() const { return atom_count_; }
  [[nodiscard]] Spin spin() const { return Spin{atom_count_}; }
  [[nodiscard]] Eigen::Index dim() const { return amplitudes_.size(); }
  [[nodiscard]] const ComplexVector& amplitudes() const { return amplitudes_; }
  [[nodiscard]] Complex operator[](Eigen::Index i) const { return amplitudes_[i]; }
  /// Amplitude C_m, addressed by magnetic quantum number.
  [[nodiscard]] Complex amplitude_at_m(double m) const {
    return amplitudes_[static_cast<Eigen::Index>(std::lround(m + spin().j()))];
  }

 private:
  int atom_count_;
  ComplexVector amplitudes_;
};

/// Dense matrices of Jx, Jy, Jz for J = N/2 (hbar = 1).
struct SpinOperators {
  int atom_count;
  ComplexMatrix jx;
  ComplexMatrix jy;
  ComplexMatrix jz;
};

/// Target cat |Psi(theta)> = N_C (|theta,phi> + |pi - theta,phi>).
struct CatSpec {
  double theta = 0.0;
  double phi = 0.0;
  int atom_count = 2;

  void validate() const {
    detail::require(atom_count >= 1, "CatSpec: atom count must be positive");
    detail::require(std::isfinite(theta) && theta >= 0.0 && theta <= kPi / 2,
                    "CatSpec: theta must lie in [0, pi/2]");
    detail::require(std::isfinite(phi), "CatSpec: phi must be finite");
  }

  /// True when the two branches are quasi-orthogonal, theta <= theta_c(N).
  [[nodiscard]] bool quasi_orthogonal() const;
};

// ---------------------------------------------------------------------------
// Dicke-basis matrix elements

/// <J,m+1| J+ |J,m> = sqrt(J(J+1) - m(m+1)).
inline double raising_element(double j, double m) { return std::sqrt(std::max(0.0, j * (j + 1.0) - m * (m + 1.0))); }

/// Real symmetric tridiagonal Jx. Entry (i+1, i) is half the raising element.
inline RealMatrix jx_real(int atom_count) {
  const Spin s{atom_count};
  RealMatrix jx = RealMatrix::Zero(s.dim(), s.dim());
  for (Eigen::Index i = 0; i + 1 < s.dim(); ++i) {
    const double v = 0.5 * raising_element(s.j(), s.m(i));
    jx(i + 1, i) = v;
    jx(i, i + 1) = v;
  }
  return jx;
}

/// Diagonal of Jz, ascending from -J to +J.
inline RealVector jz_diagonal(int atom_count) {
  const Spin s{atom_count};
  RealVector d(s.dim());
  for (Eigen::Index i = 0; i < s.dim(); ++i) d[i] = s.m(i);
  return d;
}

inline SpinOperators collective_operators(int atom_count) {
  detail::require(atom_count >= 1, "collective_operators: N must be at least 1");
  const Spin s{atom_count};
  ComplexMatrix raise = ComplexMatrix::Zero(s.dim(), s.dim());
  for (Eigen::Index i = 0; i + 1 < s.dim(); ++i) raise(i + 1, i) = raising_element(s.j(), s.m(i));
  const ComplexMatrix lower = raise.adjoint();

  SpinOperators ops{atom_count, {}, {}, {}};
  ops.jx = 0.5 * (raise + lower);
  ops.jy = Complex(0.0, -0.5) * (raise - lower);
  ops.jz = jz_diagonal(atom_count).cast<Complex>().asDiagonal();
  return ops;
}

// ---------------------------------------------------------------------------
// Analytic states

namespace detail {

inline double log_binomial(double n, double k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

/// Multiplies by a global phase so the first nonzero amplitude is real and positive.
inline void fix_global_phase(ComplexVector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v[i] != Complex(0.0, 0.0)) {
      const Complex phase = std::polar(1.0, -std::arg(v[i]));
      v *= phase;
      v[i] = std::abs(v[i]);
      return;
    }
  }
}

}  // namespace detail

/// Spin coherent state |theta, phi> with amplitudes
/// sqrt(C(2J, J+m)) cos^{J+m}(theta/2) sin^{J-m}(theta/2) e^{-i(J+m)phi}.
/// Evaluated in log space so large N neither overflows nor underflows early.
inline StateVector spin_coherent_state(int atom_count, double theta, double phi) {
  detail::require(atom_count >= 1, "spin_coherent_state: N must be at least 1");
  detail::require(std::isfinite(theta) && theta >= 0.0 && theta <= kPi, "spin_coherent_state: theta must lie in [0, pi]");
  detail::require(std::isfinite(phi), "spin_coherent_state: phi must be finite");

  // Half-angle factors; past pi/2 use the complementary angle so theta = pi
  // gives an exact zero for cos(theta/2).
  double c = 0.0;
  double s = 0.0;
  if (theta <= kPi / 2) {
    c = std::cos(theta / 2);
    s = std::sin(theta / 2);
  } else {
    c = std::sin((kPi - theta) / 2);
    s = std::cos((kPi - theta) / 2);
  }
  const double log_c = std::log(c);
  const double log_s = std::log(s);

  const Spin sp{atom_count};
  const double two_j = static_cast<double>(atom_count);
  ComplexVector amps(sp.dim());
  for (Eigen::Index i = 0; i < sp.dim(); ++i) {
    const double up = static_cast<double>(i);  // J + m
    const double down = two_j - up;            // J - m
    double log_mag = 0.5 * detail::log_binomial(two_j, up);
    if (up > 0) log_mag += up * log_c;
    if (down > 0) log_mag += down * log_s;
    const double mag = std::exp(log_mag);
    amps[i] = (phi == 0.0) ? Complex(mag, 0.0) : std::polar(mag, -up * phi);
  }
  amps /= amps.norm();
  detail::fix_global_phase(amps);
  return StateVector(atom_count, std::move(amps));
}

/// theta_c = asin{2 [((J-1)!)^2 / (2 (2J)!)]^{1/(2J)}}, the quasi-orthogonality
/// threshold for the two branches of a cat.
inline double theta_critical(int atom_count) {
  detail::require(atom_count >= 2, "theta_critical: N must be at least 2");
  const double j = 0.5 * atom_count;
  const double log_ratio = 2.0 * std::lgamma(j) - std::log(2.0) - std::lgamma(2.0 * j + 1.0);
  const double sine = 2.0 * std::exp(log_ratio / (2.0 * j));
  return std::asin(std::min(1.0, sine));
}

inline bool CatSpec::quasi_orthogonal() const { return atom_count >= 2 && theta <= theta_critical(atom_count); }

/// Exactly normalized cat N_C(|theta,phi> + |pi-theta,phi>). Emits a warning
/// through the log sink when theta exceeds theta_c.
inline StateVector cat_state(const CatSpec& spec) {
  spec.validate();
  if (!spec.quasi_orthogonal()) {
    detail::warn("cat_state: theta = " + std::to_string(spec.theta) + " exceeds theta_c for N = " +
                 std::to_string(spec.atom_count) + "; branches are not quasi-orthogonal");
  }
  const StateVector a = spin_coherent_state(spec.atom_count, spec.theta, spec.phi);
  const StateVector b = spin_coherent_state(spec.atom_count, kPi - spec.theta, spec.phi);
  ComplexVector sum = a.amplitudes() + b.amplitudes();
  sum /= sum.norm();
  detail::fix_global_phase(sum);
  return StateVector(spec.atom_count, std::move(sum));
}

/// (|J,-J> + |J,J>)/sqrt(2).
inline StateVector ghz_state(int atom_count) { return cat_state(CatSpec{0.0, 0.0, atom_count}); }

/// |J, m> for the given magnetic quantum number.
inline StateVector dicke_state(int atom_count, double m) {
  detail::require(atom_count >= 1, "dicke_state: N must be at least 1");
  const Spin s{atom_count};
  const double idx = m + s.j();
  detail::require(idx >= 0 && idx <= atom_count && std::abs(idx - std::round(idx)) < 1e-12,
                  "dicke_state: m must be one of -J..J");
  ComplexVector v = ComplexVector::Zero(s.dim());
  v[static_cast<Eigen::Index>(std::lround(idx))] = 1.0;
  return StateVector(atom_count, std::move(v));
}

// ---------------------------------------------------------------------------
// Expectation values

inline Complex overlap(const StateVector& a, const StateVector& b) {
  detail::require(a.dim() == b.dim(), "overlap: dimension mismatch");
  return a.amplitudes().dot(b.amplitudes());  // conjugates the left argument
}

/// <P> for the mode-exchange parity, which maps C_m to C_{-m}.
inline double parity_expectation(const StateVector& psi) {
  const ComplexVector& c = psi.amplitudes();
  return c.dot(c.reverse()).real();
}

struct JzMoments {
  double mean = 0.0;
  double second = 0.0;
  [[nodiscard]] double variance() const { return std::max(0.0, second - mean * mean); }
};

inline JzMoments jz_moments(const StateVector& psi) {
  const Spin s = psi.spin();
  JzMoments out;
  for (Eigen::Index i = 0; i < psi.dim(); ++i) {
    const double p = std::norm(psi[i]);
    const double m = s.m(i);
    out.mean += p * m;
    out.second += p * m * m;
  }
  return out;
}

}  // namespace spincat
