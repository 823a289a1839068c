#pragma once

// Mode-exchange parity P: C_m -> C_{-m}. The Hamiltonian chi Jz^2 + Omega Jx
// commutes with P, so it splits into an even and an odd block.

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "spincat/error.hpp"
#include "spincat/spin_algebra.hpp"

namespace spincat {

enum class Parity { even, odd };

/// Dimension of a parity sector: floor((N+2)/2) even states, the rest odd.
inline Eigen::Index parity_sector_dim(int atom_count, Parity parity) {
  const Eigen::Index even = (atom_count + 2) / 2;
  return parity == Parity::even ? even : (atom_count + 1) - even;
}

/// Orthonormal columns spanning one parity sector, ordered by |m| ascending:
/// (|J,m> + |J,-m>)/sqrt(2) for even (plus |J,0> when N is even) and
/// (|J,m> - |J,-m>)/sqrt(2) for odd, with m > 0. In this ordering any
/// chi Jz^2 + Omega Jx block is tridiagonal.
inline RealMatrix parity_basis(int atom_count, Parity parity) {
  detail::require(atom_count >= 1, "parity_basis: N must be at least 1");
  const Eigen::Index d = atom_count + 1;
  const Eigen::Index cols = parity_sector_dim(atom_count, parity);
  RealMatrix basis = RealMatrix::Zero(d, cols);
  const double r = 1.0 / std::sqrt(2.0);
  const double sign = parity == Parity::even ? 1.0 : -1.0;
  const bool has_zero = atom_count % 2 == 0;
  Eigen::Index col = 0;
  if (has_zero && parity == Parity::even) basis(atom_count / 2, col++) = 1.0;
  // Upper index of the pair with the smallest positive m.
  for (Eigen::Index up = atom_count / 2 + 1; up < d; ++up, ++col) {
    const Eigen::Index down = d - 1 - up;
    basis(up, col) = r;
    basis(down, col) = sign * r;
  }
  return basis;
}

/// Throws unless P H P = H within `tolerance` (relative to the largest entry).
inline void require_parity_symmetric(const RealMatrix& h, double tolerance = 1e-12) {
  const RealMatrix mirrored = h.reverse();  // P H P reverses both index orders
  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  detail::require((mirrored - h).cwiseAbs().maxCoeff() <= tolerance * scale, "matrix is not parity symmetric");
}

/// True when P psi = +psi (even) or -psi (odd) within `tolerance`.
inline bool has_parity(const ComplexVector& psi, Parity parity, double tolerance = 1e-12) {
  const double sign = parity == Parity::even ? 1.0 : -1.0;
  return (psi.reverse() - sign * psi).cwiseAbs().maxCoeff() <= tolerance;
}

}  // namespace spincat
