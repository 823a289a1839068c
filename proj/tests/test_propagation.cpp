#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "spincat/parity.hpp"
#include "spincat/propagation.hpp"

using namespace spincat;

namespace {

oracle::CMat dense_h(int n, double chi, double omega) {
  const oracle::Ops ops = oracle::spin_ops(n);
  return chi * ops.jz * ops.jz + omega * ops.jx;
}

StateVector random_state(int n, std::mt19937_64& rng) { return StateVector(n, oracle::random_state(n + 1, rng)); }

ControlSchedule random_schedule(int n, int segments, double t, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  ControlSchedule s{n, t, {}};
  for (int k = 0; k < segments; ++k) s.lambdas.push_back(u(rng));
  return s;
}

}  // namespace

TEST(Hamiltonian, SpinOneDiagonal) {
  const Hamiltonian h = build_hamiltonian(2, 1.0, 0.0);
  RealMatrix expected = RealMatrix::Zero(3, 3);
  expected.diagonal() << 1, 0, 1;
  EXPECT_EQ(h.matrix, expected);
}

TEST(Hamiltonian, PureDriveIsJx) {
  for (int n : {1, 5, 12}) EXPECT_EQ(build_hamiltonian(n, 0.0, 1.0).matrix, jx_real(n));
}

TEST(Hamiltonian, NegativeChiGroundEnergy) {
  const Eigensystem es = eigensystem(build_hamiltonian(100, -1.0, 0.0));
  EXPECT_NEAR(es.values[0], -2500.0, 1e-9);
  EXPECT_NEAR(es.values[1], -2500.0, 1e-9);
  EXPECT_GT(es.values[2], -2500.0 + 1.0);
}

TEST(Hamiltonian, SymmetricAndParityInvariant) {
  for (double w : {0.0, 0.7, -35.0}) {
    const Hamiltonian h = build_hamiltonian(9, -1.3, w);
    EXPECT_LE((h.matrix - h.matrix.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NO_THROW(require_parity_symmetric(h.matrix));
  }
}

TEST(Hamiltonian, TridiagonalSpectrumMatchesDense) {
  const Hamiltonian h = build_hamiltonian(40, -1.0, -57.0);
  const Eigensystem es = eigensystem(h);
  Eigen::SelfAdjointEigenSolver<RealMatrix> dense(h.matrix);
  EXPECT_LE((es.values - dense.eigenvalues()).cwiseAbs().maxCoeff(), 1e-9);
  const RealMatrix recon = es.vectors * es.values.asDiagonal() * es.vectors.transpose();
  EXPECT_LE((recon - h.matrix).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(PropagateConst, ZeroTimeIsIdentity) {
  std::mt19937_64 rng(1);
  const StateVector psi = random_state(7, rng);
  const StateVector out = propagate_const(build_hamiltonian(7, 1.0, 2.0), psi, 0.0);
  EXPECT_EQ(out.amplitudes(), psi.amplitudes());
}

TEST(PropagateConst, RejectsBadInput) {
  std::mt19937_64 rng(2);
  const StateVector psi = random_state(4, rng);
  EXPECT_THROW(propagate_const(build_hamiltonian(5, 1.0, 0.0), psi, 0.1), InvalidArgument);
  EXPECT_THROW(propagate_const(build_hamiltonian(4, 1.0, 0.0), psi, -0.1), InvalidArgument);
}

TEST(PropagateConst, TwistRevivalAtTwoPi) {
  std::mt19937_64 rng(3);
  for (int n : {2, 8, 30}) {
    const StateVector psi = random_state(n, rng);
    const StateVector out = propagate_const(build_hamiltonian(n, 1.0, 0.0), psi, 2 * kPi);
    EXPECT_NEAR(std::norm(overlap(psi, out)), 1.0, 1e-10);
  }
}

TEST(PropagateConst, DickeStatesOnlyAcquirePhase) {
  const int n = 6;
  const double dt = 0.37;
  for (int i = 0; i <= n; ++i) {
    const double m = i - 0.5 * n;
    const StateVector out = propagate_const(build_hamiltonian(n, 1.0, 0.0), dicke_state(n, m), dt);
    for (int k = 0; k <= n; ++k) {
      const Complex expected = k == i ? std::polar(1.0, -m * m * dt) : Complex(0.0);
      EXPECT_NEAR(std::abs(out[k] - expected), 0.0, 1e-12);
    }
  }
}

TEST(PropagateConst, MatchesMatrixExponential) {
  std::mt19937_64 rng(4);
  for (int n : {1, 3, 8, 15}) {
    const double chi = -1.0;
    const double omega = 3.0 * n;
    const StateVector psi = random_state(n, rng);
    const StateVector out = propagate_const(build_hamiltonian(n, chi, omega), psi, 0.21);
    const oracle::CVec ref = oracle::expm(oracle::cd(0, -0.21) * dense_h(n, chi, omega)) * psi.amplitudes();
    EXPECT_LE((out.amplitudes() - ref).norm(), 1e-12) << n;
  }
}

TEST(PropagateConst, UnitaryForRandomHermitian) {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 10; ++rep) {
    const int n = 3 + rep;
    const ComplexMatrix h = oracle::random_hermitian(n + 1, rng);
    const StateVector psi = random_state(n, rng);
    for (double dt : {0.01, 1.0, 10.0}) {
      const StateVector out = propagate_const(h, psi, dt);
      EXPECT_NEAR(out.amplitudes().squaredNorm(), 1.0, 1e-12);
      const oracle::CVec ref = oracle::expm(oracle::cd(0, -dt) * h) * psi.amplitudes();
      EXPECT_LE((out.amplitudes() - ref).norm(), 1e-9);
    }
  }
}

TEST(PropagateConst, Composition) {
  std::mt19937_64 rng(6);
  const Hamiltonian h = build_hamiltonian(20, -1.0, 13.0);
  const StateVector psi = random_state(20, rng);
  const StateVector joint = propagate_const(h, psi, 0.5);
  const StateVector split = propagate_const(h, propagate_const(h, psi, 0.2), 0.3);
  EXPECT_LE((joint.amplitudes() - split.amplitudes()).norm(), 1e-10);
}

TEST(EvolvePiecewise, ZeroDriveEqualsTwist) {
  std::mt19937_64 rng(7);
  const StateVector psi = random_state(10, rng);
  const ControlSchedule s{10, 0.8, {0.0, 0.0, 0.0, 0.0}};
  const PropagationResult r = evolve_piecewise(10, 1.0, s, psi);
  const StateVector ref = propagate_const(build_hamiltonian(10, 1.0, 0.0), psi, 0.8);
  EXPECT_LE((r.final_state.amplitudes() - ref.amplitudes()).norm(), 1e-12);
}

TEST(EvolvePiecewise, EqualSegmentsMerge) {
  std::mt19937_64 rng(8);
  const StateVector psi = random_state(12, rng);
  const PropagationResult two = evolve_piecewise(12, 1.0, {12, 0.4, {1.3, 1.3}}, psi);
  const PropagationResult one = evolve_piecewise(12, 1.0, {12, 0.4, {1.3}}, psi);
  EXPECT_LE((two.final_state.amplitudes() - one.final_state.amplitudes()).norm(), 1e-12);
}

TEST(EvolvePiecewise, CheckpointsFollowCallerOrder) {
  std::mt19937_64 rng(9);
  const StateVector psi = random_state(6, rng);
  const ControlSchedule s{6, 1.0, {0.5, -1.0, 2.0, 1.0}};
  const std::vector<double> times{1.0, 0.0, 0.25, 0.6};
  const PropagationResult r = evolve_piecewise(6, 1.0, s, psi, times);
  ASSERT_EQ(r.checkpoints.size(), times.size());
  for (std::size_t i = 0; i < times.size(); ++i) EXPECT_EQ(r.checkpoints[i].time, times[i]);
  EXPECT_EQ(r.checkpoints[1].state.amplitudes(), psi.amplitudes());
  EXPECT_LE((r.checkpoints[0].state.amplitudes() - r.final_state.amplitudes()).norm(), 1e-14);
  // t = 0.25 is the start of segment 2; segment 1 alone must reproduce it.
  const PropagationResult first = evolve_piecewise(6, 1.0, {6, 0.25, {0.5}}, psi);
  EXPECT_LE((r.checkpoints[2].state.amplitudes() - first.final_state.amplitudes()).norm(), 1e-12);
  // t = 0.6 lies inside segment 3.
  const StateVector at_half = evolve_piecewise(6, 1.0, {6, 0.5, {0.5, -1.0}}, psi).final_state;
  const StateVector ref = propagate_const(build_hamiltonian(6, 1.0, s.omega(2, 1.0)), at_half, 0.1);
  EXPECT_LE((r.checkpoints[3].state.amplitudes() - ref.amplitudes()).norm(), 1e-12);
}

TEST(EvolvePiecewise, RejectsCheckpointsOutsideHorizon) {
  std::mt19937_64 rng(10);
  const StateVector psi = random_state(3, rng);
  EXPECT_THROW(evolve_piecewise(3, 1.0, {3, 1.0, {1.0}}, psi, {1.5}), InvalidArgument);
  EXPECT_THROW(evolve_piecewise(3, 1.0, {3, 1.0, {1.0}}, psi, {-0.1}), InvalidArgument);
}

TEST(EvolvePiecewise, RejectsInvalidSchedule) {
  std::mt19937_64 rng(11);
  const StateVector psi = random_state(3, rng);
  EXPECT_THROW(evolve_piecewise(3, 1.0, {3, 1.0, {}}, psi), InvalidArgument);
  EXPECT_THROW(evolve_piecewise(3, 1.0, {3, 0.0, {1.0}}, psi), InvalidArgument);
  EXPECT_THROW(evolve_piecewise(3, 1.0, {3, 1.0, {std::nan("")}}, psi), InvalidArgument);
  EXPECT_THROW(evolve_piecewise(3, 1.0, {4, 1.0, {1.0}}, psi), InvalidArgument);
}

TEST(EvolvePiecewise, MatchesRungeKuttaOracle) {
  std::mt19937_64 rng(12);
  for (int n = 1; n <= 6; ++n) {
    const double chi = n % 2 == 0 ? 1.0 : -1.0;
    const ControlSchedule s = random_schedule(n, 4, 0.8, rng);
    const StateVector psi = random_state(n, rng);
    const PropagationResult r = evolve_piecewise(n, chi, s, psi);
    oracle::CVec ref = psi.amplitudes();
    for (std::size_t k = 0; k < s.segments(); ++k) {
      ref = oracle::rk4(dense_h(n, chi, s.omega(k, chi)), ref, s.segment_duration(), 4000);
    }
    EXPECT_LE(oracle::phase_aligned_distance(r.final_state.amplitudes(), ref), 1e-6) << n;
    EXPECT_LE(r.norm_drift, 1e-10);
  }
}

TEST(EvolvePiecewise, ConservesNormAndParity) {
  std::mt19937_64 rng(13);
  const int n = 40;
  const StateVector psi = spin_coherent_state(n, kPi / 2, 0.0);
  const ControlSchedule s = random_schedule(n, 12, 0.6, rng);
  std::vector<double> times;
  for (int k = 0; k <= 60; ++k) times.push_back(0.01 * k);
  const PropagationResult r = evolve_piecewise(n, -1.0, s, psi, times);
  EXPECT_LE(r.norm_drift, 1e-10);
  for (const Checkpoint& cp : r.checkpoints) EXPECT_NEAR(parity_expectation(cp.state), 1.0, 1e-8);
}

TEST(EvolveSwept, ConstantTrajectoryEqualsConstPropagation) {
  std::mt19937_64 rng(14);
  const int n = 16;
  const StateVector psi = random_state(n, rng);
  SweepTrajectory traj{0.0, 1.0, {0.0, 0.1, 0.25, 0.5}, {7.0, 7.0, 7.0, 7.0}};
  const PropagationResult r = evolve_swept(n, -1.0, traj, psi);
  const StateVector ref = propagate_const(build_hamiltonian(n, -1.0, 7.0), psi, 0.5);
  EXPECT_NEAR(std::norm(overlap(ref, r.final_state)), 1.0, 1e-8);
}

TEST(EvolveSwept, MatchesRungeKuttaOnLinearRamp) {
  const int n = 4;
  const double chi = -1.0;
  const double t_end = 1.0;
  auto omega = [](double t) { return 8.0 * (1.0 - t); };
  std::vector<double> ts;
  std::vector<double> ws;
  for (int k = 0; k <= 50; ++k) {
    ts.push_back(t_end * k / 50.0);
    ws.push_back(omega(ts.back()));
  }
  const StateVector psi = spin_coherent_state(n, kPi / 2, 0.0);
  const PropagationResult r = evolve_swept(n, chi, {0.0, 1.0, ts, ws}, psi, {}, {1e-10, 1, 1 << 12});

  // Time-dependent RK4 on the dense Hamiltonian.
  const oracle::Ops ops = oracle::spin_ops(n);
  auto rhs = [&](double t, const oracle::CVec& v) -> oracle::CVec {
    return oracle::cd(0, -1) * ((chi * ops.jz * ops.jz + omega(t) * ops.jx) * v);
  };
  oracle::CVec v = psi.amplitudes();
  const int steps = 20000;
  const double h = t_end / steps;
  for (int s = 0; s < steps; ++s) {
    const double t = s * h;
    const oracle::CVec k1 = rhs(t, v);
    const oracle::CVec k2 = rhs(t + h / 2, v + h / 2 * k1);
    const oracle::CVec k3 = rhs(t + h / 2, v + h / 2 * k2);
    const oracle::CVec k4 = rhs(t + h, v + h * k3);
    v += h / 6 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  EXPECT_LE(oracle::phase_aligned_distance(r.final_state.amplitudes(), v), 1e-4);
}

TEST(EvolveSwept, StepHalvingContract) {
  const int n = 20;
  std::vector<double> ts;
  std::vector<double> ws;
  for (int k = 0; k <= 20; ++k) {
    ts.push_back(0.02 * k);
    ws.push_back(40.0 - 2.0 * k);
  }
  const SweepTrajectory traj{0.0, -1.0, ts, ws};
  const StateVector psi = spin_coherent_state(n, kPi / 2, 0.0);
  const PropagationResult r = evolve_swept(n, -1.0, traj, psi);
  // A pass twice as fine again stays within the contract.
  const PropagationResult finer = detail::evolve_swept_fixed(n, -1.0, traj, psi, {}, 1 << 10);
  EXPECT_LT(1.0 - std::norm(overlap(r.final_state, finer.final_state)), 1e-5);
  EXPECT_LE(r.norm_drift, 1e-10);
}

TEST(EvolveSwept, RejectsUnorderedTimes) {
  const StateVector psi = spin_coherent_state(4, kPi / 2, 0.0);
  EXPECT_THROW(evolve_swept(4, -1.0, {0.0, 1.0, {0.0, 0.2, 0.1}, {1.0, 1.0, 1.0}}, psi), InvalidArgument);
  EXPECT_THROW(evolve_swept(4, -1.0, {0.0, 1.0, {0.1, 0.2}, {1.0, 1.0}}, psi), InvalidArgument);
}

TEST(EvolveSwept, ReportsNonConvergence) {
  const StateVector psi = spin_coherent_state(30, kPi / 2, 0.0);
  const SweepTrajectory traj{0.0, 1.0, {0.0, 2.0}, {200.0, 0.0}};
  EXPECT_THROW(evolve_swept(30, -1.0, traj, psi, {}, {1e-14, 1, 2}), NumericalError);
}
