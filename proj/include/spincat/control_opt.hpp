#pragma once

// Optimal piecewise twist-and-turn control.
//
// The drive Omega(t) = Lambda(t) N chi / 2 is constant on n equal segments of
// [0, T]. Starting from the coherent state |pi/2, 0>, the segment amplitudes
// are chosen to maximize F(T) = |<psi(T)|target>|^2 by minimizing -F with a
// box-constrained BFGS driven by the exact adjoint gradient. Several seeded
// starts are run and the best result is kept.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <thread>
#include <utility>
#include <vector>

#include "spincat/bfgs.hpp"
#include "spincat/controls.hpp"
#include "spincat/error.hpp"
#include "spincat/log.hpp"
#include "spincat/parity.hpp"
#include "spincat/propagation.hpp"
#include "spincat/spin_algebra.hpp"

namespace spincat {

/// Fixed data of one fidelity-maximization problem: H_k = D + omega_k C in a
/// working basis. When the initial and target states are both parity even,
/// the working basis is the even sector, which halves the dimension without
/// changing any fidelity.
class ControlProblem {
 public:
  ControlProblem(int atom_count, double chi, double total_time, std::size_t segments, const StateVector& initial,
                 const StateVector& target)
      : atom_count_(atom_count), chi_(chi), total_time_(total_time), segments_(segments) {
    detail::require(atom_count >= 1, "ControlProblem: N must be at least 1");
    detail::require(std::isfinite(chi) && chi != 0.0, "ControlProblem: chi must be finite and nonzero");
    detail::require(std::isfinite(total_time) && total_time > 0.0, "ControlProblem: T must be positive");
    detail::require(segments >= 1, "ControlProblem: at least one segment is required");
    detail::require(initial.atom_count() == atom_count && target.atom_count() == atom_count,
                    "ControlProblem: states built for a different N");

    const RealVector jz2 = jz_diagonal(atom_count).array().square().matrix();
    const RealMatrix jx = jx_real(atom_count);
    if (has_parity(initial.amplitudes(), Parity::even) && has_parity(target.amplitudes(), Parity::even)) {
      const RealMatrix basis = parity_basis(atom_count, Parity::even);
      const RealMatrix c = basis.transpose() * jx * basis;
      drift_ = chi * (basis.transpose() * jz2.asDiagonal() * basis).diagonal();
      control_diag_ = c.diagonal();
      control_sub_ = c.diagonal(-1);
      initial_ = basis.transpose().cast<Complex>() * initial.amplitudes();
      target_ = basis.transpose().cast<Complex>() * target.amplitudes();
      reduced_ = true;
    } else {
      drift_ = chi * jz2;
      control_diag_ = RealVector::Zero(jz2.size());
      control_sub_ = jx.diagonal(-1);
      initial_ = initial.amplitudes();
      target_ = target.amplitudes();
    }
  }

  [[nodiscard]] int atom_count() const { return atom_count_; }
  [[nodiscard]] double chi() const { return chi_; }
  [[nodiscard]] double total_time() const { return total_time_; }
  [[nodiscard]] std::size_t segments() const { return segments_; }
  [[nodiscard]] bool reduced() const { return reduced_; }
  [[nodiscard]] Eigen::Index working_dim() const { return drift_.size(); }

  /// d Omega / d Lambda.
  [[nodiscard]] double omega_per_lambda() const { return atom_count_ * chi_ / 2.0; }

  /// F(T) for the given amplitudes.
  [[nodiscard]] double fidelity(const Eigen::VectorXd& lambdas) const {
    check(lambdas);
    const double dt = total_time_ / static_cast<double>(segments_);
    ComplexVector psi = initial_;
    for (std::size_t k = 0; k < segments_; ++k) psi = apply_evolution(segment(lambdas[k]), psi, dt);
    return std::norm(target_.dot(psi));
  }

  /// F(T) and dF/dLambda by forward propagation followed by a backward
  /// costate sweep. Within segment k, with eigenpairs (lambda_a, v_a) of H_k,
  ///   dU/dOmega = V (G o V^T C V) V^T,
  ///   G_ab = (e^{-i lambda_a dt} - e^{-i lambda_b dt}) / (lambda_a - lambda_b)
  ///        = -i dt e^{-i (lambda_a + lambda_b) dt / 2} sinc((lambda_a - lambda_b) dt / 2),
  /// where the sinc form is exact and reduces to -i dt e^{-i lambda dt} on the
  /// diagonal and for (near-)degenerate pairs.
  double fidelity_and_gradient(const Eigen::VectorXd& lambdas, Eigen::VectorXd& grad) const {
    check(lambdas);
    const std::size_t n = segments_;
    const double dt = total_time_ / static_cast<double>(n);
    std::vector<Eigensystem> systems;
    std::vector<ComplexVector> states;  // psi before segment k
    systems.reserve(n);
    states.reserve(n);
    ComplexVector psi = initial_;
    for (std::size_t k = 0; k < n; ++k) {
      systems.push_back(segment(lambdas[k]));
      states.push_back(psi);
      psi = apply_evolution(systems.back(), psi, dt);
    }
    const Complex amp = target_.dot(psi);  // <target|psi(T)>

    grad.resize(static_cast<Eigen::Index>(n));
    ComplexVector costate = target_;  // |lambda_k> with <lambda_k|psi_k> = amp
    const Eigen::Index d = working_dim();
    RealVector sin_half(d), cos_half(d);
    RealMatrix kernel(d, d);
    for (std::size_t kk = n; kk-- > 0;) {
      const Eigensystem& es = systems[kk];
      const RealMatrix& v = es.vectors;
      // kernel = sinc((lambda_i - lambda_j) dt/2) o (V^T C V)
      kernel.noalias() = v.transpose() * apply_control(v);
      for (Eigen::Index i = 0; i < d; ++i) {
        sin_half[i] = std::sin(0.5 * es.values[i] * dt);
        cos_half[i] = std::cos(0.5 * es.values[i] * dt);
      }
      for (Eigen::Index j = 0; j < d; ++j) {
        for (Eigen::Index i = 0; i < d; ++i) {
          const double x = 0.5 * (es.values[i] - es.values[j]) * dt;
          const double sinc =
              std::abs(x) < 1e-6 ? 1.0 - x * x / 6.0 : (sin_half[i] * cos_half[j] - cos_half[i] * sin_half[j]) / x;
          kernel(i, j) *= sinc;
        }
      }
      // a'_i = conj(<v_i|lambda>) e^{-i lambda_i dt/2}, b'_j = e^{-i lambda_j dt/2} <v_j|psi>
      const RealVector a_re = v.transpose() * costate.real();
      const RealVector a_im = v.transpose() * costate.imag();
      const RealVector b_re = v.transpose() * states[kk].real();
      const RealVector b_im = v.transpose() * states[kk].imag();
      // conj(a) e = (a_re - i a_im)(c - i s)
      const RealVector ap_re = a_re.cwiseProduct(cos_half) - a_im.cwiseProduct(sin_half);
      const RealVector ap_im = -(a_re.cwiseProduct(sin_half) + a_im.cwiseProduct(cos_half));
      // e b = (c - i s)(b_re + i b_im)
      const RealVector bp_re = cos_half.cwiseProduct(b_re) + sin_half.cwiseProduct(b_im);
      const RealVector bp_im = cos_half.cwiseProduct(b_im) - sin_half.cwiseProduct(b_re);
      const RealVector kb_re = kernel * bp_re;
      const RealVector kb_im = kernel * bp_im;
      const Complex sum(ap_re.dot(kb_re) - ap_im.dot(kb_im), ap_re.dot(kb_im) + ap_im.dot(kb_re));
      const Complex d_amp = Complex(0.0, -dt) * sum * omega_per_lambda();
      grad[static_cast<Eigen::Index>(kk)] = 2.0 * (std::conj(amp) * d_amp).real();
      // lambda_{k-1} = U_k^dagger lambda_k
      costate = apply_evolution(es, costate, -dt);
    }
    return std::norm(amp);
  }

 private:
  void check(const Eigen::VectorXd& lambdas) const {
    detail::require(static_cast<std::size_t>(lambdas.size()) == segments_, "ControlProblem: wrong number of amplitudes");
    for (Eigen::Index k = 0; k < lambdas.size(); ++k) {
      detail::require(std::isfinite(lambdas[k]), "ControlProblem: non-finite amplitude");
    }
  }

  [[nodiscard]] Eigensystem segment(double lambda) const {
    const double omega = lambda * omega_per_lambda();
    return tridiagonal_eigensystem(drift_ + omega * control_diag_, omega * control_sub_);
  }

  /// C * x for the tridiagonal control operator.
  [[nodiscard]] RealMatrix apply_control(const RealMatrix& x) const {
    RealMatrix out = control_diag_.asDiagonal() * x;
    const Eigen::Index d = x.rows();
    if (d > 1) {
      out.topRows(d - 1) += control_sub_.asDiagonal() * x.bottomRows(d - 1);
      out.bottomRows(d - 1) += control_sub_.asDiagonal() * x.topRows(d - 1);
    }
    return out;
  }

  int atom_count_;
  double chi_;
  double total_time_;
  std::size_t segments_;
  bool reduced_ = false;
  RealVector drift_;
  RealVector control_diag_;
  RealVector control_sub_;
  ComplexVector initial_;
  ComplexVector target_;
};

/// The fixed initial state of the optimization, |pi/2, 0>.
inline StateVector optimization_initial_state(int atom_count) { return spin_coherent_state(atom_count, kPi / 2, 0.0); }

/// -F(T) for the schedule, starting from |pi/2, 0>.
inline double objective(const ControlSchedule& schedule, double chi, const StateVector& target) {
  schedule.validate();
  const ControlProblem problem(schedule.atom_count, chi, schedule.total_time, schedule.segments(),
                               optimization_initial_state(schedule.atom_count), target);
  return -problem.fidelity(Eigen::Map<const Eigen::VectorXd>(schedule.lambdas.data(), schedule.lambdas.size()));
}

/// d(-F)/dLambda^(k), k = 1..n, from the adjoint sweep.
inline std::vector<double> gradient(const ControlSchedule& schedule, double chi, const StateVector& target) {
  schedule.validate();
  const ControlProblem problem(schedule.atom_count, chi, schedule.total_time, schedule.segments(),
                               optimization_initial_state(schedule.atom_count), target);
  Eigen::VectorXd grad;
  problem.fidelity_and_gradient(Eigen::Map<const Eigen::VectorXd>(schedule.lambdas.data(), schedule.lambdas.size()), grad);
  std::vector<double> out(grad.size());
  for (Eigen::Index k = 0; k < grad.size(); ++k) out[k] = -grad[k];
  return out;
}

struct OptimizeOptions {
  int restarts = 24;
  std::uint64_t seed = 0;
  double lambda_max = 4.0;
  /// Random starts are uniform in [-init_range, init_range].
  double init_range = 2.0;
  /// Amplitude of the deterministic constant start (Omega = N chi / 2).
  double constant_start = 1.0;
  /// Extra starts tried before the seeded ones, e.g. a neighbouring optimum.
  std::vector<std::vector<double>> warm_starts;
  BfgsOptions bfgs{};
  /// Worker threads for restarts; results do not depend on this.
  int threads = 1;
};

struct RestartRecord {
  double fidelity = 0.0;
  BfgsStatus status = BfgsStatus::max_iterations;
  int iterations = 0;
};

struct OptimizationOutcome {
  ControlSchedule best_schedule;
  double best_fidelity = 0.0;  ///< replayed through evolve_piecewise
  int restarts_used = 0;
  std::vector<double> objective_history;  ///< -F per iteration of the winning start
  double gradient_norm_final = 0.0;       ///< projected gradient norm at the winner
  bool warning = false;                   ///< no start reached a convergence criterion
  std::vector<RestartRecord> restarts;    ///< warm starts first, then seeded starts
};

namespace detail {

/// Seed for start r: SplitMix64 applied to (seed + r * golden gamma).
inline std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + (stream + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Uniform double in [0, 1) from the top 53 bits; identical on every platform.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Descending linear ramps Lambda^(k) = a + (b - a)(k + 1/2)/n, which follow the
/// shape of the optimal drives (strong turning early, weak late).
inline constexpr double kRampStarts[] = {2.0, 2.5, 3.0};
inline constexpr double kRampEnds[] = {0.0, 0.5, 1.0, 1.5, 2.0};
inline constexpr int kRampCount = 15;

/// Starting amplitudes for seeded start r (0-based): r = 0 is the constant
/// twist-and-turn drive, 1..15 the ramp family, and later starts draw n
/// uniform values from their own stream.
inline Eigen::VectorXd seeded_start(std::size_t segments, int r, const OptimizeOptions& options) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(segments));
  const double n = static_cast<double>(segments);
  if (r == 0) {
    x.setConstant(options.constant_start);
  } else if (r <= kRampCount) {
    const double a = kRampStarts[(r - 1) / 5];
    const double b = kRampEnds[(r - 1) % 5];
    for (Eigen::Index k = 0; k < x.size(); ++k) x[k] = a + (b - a) * (static_cast<double>(k) + 0.5) / n;
  } else {
    std::mt19937_64 rng(split_seed(options.seed, static_cast<std::uint64_t>(r)));
    for (Eigen::Index k = 0; k < x.size(); ++k) x[k] = options.init_range * (2.0 * unit_uniform(rng) - 1.0);
  }
  return x.cwiseMax(-options.lambda_max).cwiseMin(options.lambda_max);
}

}  // namespace detail

/// Multi-start maximization of F(T). Deterministic for a given seed and
/// option set regardless of thread count.
inline OptimizationOutcome optimize(int atom_count, double chi, double total_time, std::size_t segments,
                                    const StateVector& target, const OptimizeOptions& options = {}) {
  detail::require(segments >= 1, "optimize: n must be at least 1");
  detail::require(std::isfinite(total_time) && total_time > 0.0, "optimize: T must be positive");
  detail::require(options.restarts >= 1, "optimize: at least one restart is required");
  detail::require(options.lambda_max > 0.0, "optimize: lambda_max must be positive");
  detail::require(target.atom_count() == atom_count, "optimize: target built for a different N");
  const ControlProblem problem(atom_count, chi, total_time, segments, optimization_initial_state(atom_count), target);

  std::vector<Eigen::VectorXd> starts;
  for (const auto& w : options.warm_starts) {
    detail::require(w.size() == segments, "optimize: warm start has the wrong number of segments");
    starts.push_back(Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size())));
  }
  for (int r = 0; r < options.restarts; ++r) starts.push_back(detail::seeded_start(segments, r, options));

  BfgsOptions bfgs = options.bfgs;
  bfgs.bound = options.lambda_max;
  auto fg = [&problem](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    const double f = problem.fidelity_and_gradient(x, g);
    g = -g;
    return -f;
  };

  std::vector<BfgsResult> results(starts.size());
  auto run_range = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t i = begin; i < starts.size(); i += stride) results[i] = minimize_bfgs(fg, starts[i], bfgs);
  };
  const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(1, options.threads)), 1, starts.size());
  if (workers == 1) {
    run_range(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run_range, w, workers);
  }

  OptimizationOutcome out;
  std::size_t best = 0;
  bool any_converged = false;
  for (std::size_t i = 0; i < results.size(); ++i) {
    out.restarts.push_back({-results[i].value, results[i].status, results[i].iterations});
    any_converged = any_converged || results[i].converged();
    if (results[i].value < results[best].value) best = i;
  }
  const BfgsResult& winner = results[best];
  out.best_schedule = ControlSchedule{atom_count, total_time, std::vector<double>(winner.x.data(), winner.x.data() + winner.x.size())};
  out.restarts_used = static_cast<int>(results.size());
  out.objective_history = winner.history;
  out.gradient_norm_final = winner.projected_gradient_norm;
  out.warning = !any_converged;
  if (out.warning) detail::warn("optimize: no start reached a convergence criterion; returning the best point found");

  const PropagationResult replay = evolve_piecewise(atom_count, chi, out.best_schedule, optimization_initial_state(atom_count));
  out.best_fidelity = std::norm(overlap(target, replay.final_state));
  return out;
}

struct TimeProbe {
  double total_time = 0.0;
  double fidelity = 0.0;
};

struct MinimalTimeResult {
  bool reachable = false;
  double minimal_time = 0.0;  ///< smallest grid T with F >= floor (valid when reachable)
  OptimizationOutcome outcome;  ///< optimum at minimal_time, or at the largest T when unreachable
  std::vector<TimeProbe> probes;  ///< in evaluation order
};

struct TimeScanOptions {
  double fidelity_floor = 0.99;
  double t_min = 0.02;
  double t_max = 0.6;
  double coarse_step = 0.02;  ///< spacing of the ascending pass
  double resolution = 1e-3;   ///< grid spacing of the refined T
  OptimizeOptions optimize{};
};

/// Smallest T for which optimize reaches the fidelity floor. The optimal
/// fidelity is not monotone in T over long horizons, so T is first raised
/// from t_min in coarse steps until the floor is met, and the bracket is then
/// bisected down to the resolution. Each probe is a full optimize call
/// warm-started from the optimum of the nearest probe below (when infeasible)
/// or above (when feasible).
inline MinimalTimeResult minimal_time_scan(int atom_count, double chi, std::size_t segments, const StateVector& target,
                                           const TimeScanOptions& options = {}) {
  detail::require(options.t_min > 0.0 && options.t_max > options.t_min, "minimal_time_scan: need 0 < t_min < t_max");
  detail::require(options.resolution > 0.0 && options.coarse_step >= options.resolution,
                  "minimal_time_scan: need 0 < resolution <= coarse_step");
  detail::require(options.fidelity_floor > 0.0 && options.fidelity_floor <= 1.0, "minimal_time_scan: floor must lie in (0, 1]");

  // Grid T_k = t_min + k * resolution; the coarse pass visits every `stride`-th point.
  const auto last = static_cast<long>(std::floor((options.t_max - options.t_min) / options.resolution + 1e-9));
  const long stride = std::max(1L, std::lround(options.coarse_step / options.resolution));
  auto grid_time = [&](long k) { return options.t_min + static_cast<double>(k) * options.resolution; };

  MinimalTimeResult result;
  std::optional<OptimizationOutcome> below;  // best probe known infeasible, highest T
  std::optional<OptimizationOutcome> above;  // feasible probe, lowest T
  auto probe = [&](long k, const std::optional<OptimizationOutcome>& seed_from) {
    OptimizeOptions opt = options.optimize;
    if (seed_from) opt.warm_starts.insert(opt.warm_starts.begin(), seed_from->best_schedule.lambdas);
    OptimizationOutcome o = optimize(atom_count, chi, grid_time(k), segments, target, opt);
    result.probes.push_back({grid_time(k), o.best_fidelity});
    return o;
  };

  long lo = -1;
  long hi = -1;
  for (long k = 0;; k = std::min(k + stride, last)) {
    OptimizationOutcome o = probe(k, below);
    if (o.best_fidelity >= options.fidelity_floor) {
      hi = k;
      above = std::move(o);
      break;
    }
    lo = k;
    below = std::move(o);
    if (k == last) break;
  }
  if (hi < 0) {
    detail::warn("minimal_time_scan: fidelity floor not reached for T <= " + std::to_string(grid_time(last)));
    result.outcome = std::move(*below);
    return result;
  }
  while (hi - lo > 1) {
    const long mid = lo + (hi - lo) / 2;
    OptimizationOutcome o = probe(mid, above);
    if (o.best_fidelity >= options.fidelity_floor) {
      hi = mid;
      above = std::move(o);
    } else {
      lo = mid;
    }
  }
  result.reachable = true;
  result.minimal_time = grid_time(hi);
  result.outcome = std::move(*above);
  return result;
}

}  // namespace spincat
