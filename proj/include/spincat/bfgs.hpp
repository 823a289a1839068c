#pragma once

// Box-constrained BFGS: inverse-Hessian quasi-Newton steps, projected onto
// [-bound, bound]^n, with Armijo backtracking along the projected path.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

namespace spincat {

struct BfgsOptions {
  double gradient_tolerance = 1e-8;   ///< on the projected gradient norm
  double relative_tolerance = 1e-12;  ///< on |f_k - f_{k+1}| / max(1, |f_k|)
  int max_iterations = 500;
  double bound = 4.0;  ///< |x_i| <= bound; non-positive disables projection
  double armijo = 1e-4;
  int max_backtracks = 60;
};

enum class BfgsStatus { gradient_converged, objective_converged, max_iterations, line_search_failed };

struct BfgsResult {
  Eigen::VectorXd x;
  double value = 0.0;
  Eigen::VectorXd gradient;
  double projected_gradient_norm = 0.0;
  int iterations = 0;
  BfgsStatus status = BfgsStatus::max_iterations;
  std::vector<double> history;  ///< objective after every accepted step, starting with f(x0)

  [[nodiscard]] bool converged() const {
    return status == BfgsStatus::gradient_converged || status == BfgsStatus::objective_converged;
  }
};

namespace detail {

inline Eigen::VectorXd project_box(Eigen::VectorXd x, double bound) {
  if (bound > 0.0) x = x.cwiseMax(-bound).cwiseMin(bound);
  return x;
}

/// Components of g that can still decrease f without leaving the box.
inline Eigen::VectorXd projected_gradient(const Eigen::VectorXd& x, const Eigen::VectorXd& g, double bound) {
  Eigen::VectorXd pg = g;
  if (bound <= 0.0) return pg;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const bool at_lower = x[i] <= -bound && g[i] > 0.0;
    const bool at_upper = x[i] >= bound && g[i] < 0.0;
    if (at_lower || at_upper) pg[i] = 0.0;
  }
  return pg;
}

}  // namespace detail

/// Minimizes f. `value_and_gradient(x, grad)` returns f(x) and writes the
/// gradient into `grad` (already sized).
template <typename ValueAndGradient>
BfgsResult minimize_bfgs(ValueAndGradient&& value_and_gradient, const Eigen::VectorXd& x0, const BfgsOptions& options = {}) {
  const Eigen::Index n = x0.size();
  BfgsResult r;
  r.x = detail::project_box(x0, options.bound);
  r.gradient = Eigen::VectorXd::Zero(n);
  r.value = value_and_gradient(r.x, r.gradient);
  r.history.push_back(r.value);

  Eigen::MatrixXd inv_hessian = Eigen::MatrixXd::Identity(n, n);
  bool scaled = false;
  Eigen::VectorXd trial_grad(n);

  for (r.iterations = 0; r.iterations < options.max_iterations; ++r.iterations) {
    Eigen::VectorXd pg = detail::projected_gradient(r.x, r.gradient, options.bound);
    r.projected_gradient_norm = pg.norm();
    if (r.projected_gradient_norm <= options.gradient_tolerance) {
      r.status = BfgsStatus::gradient_converged;
      return r;
    }

    // Active bounds are frozen for this step.
    Eigen::VectorXd direction = -(inv_hessian * pg);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (pg[i] == 0.0 && r.gradient[i] != 0.0) direction[i] = 0.0;
    }
    if (direction.dot(pg) >= 0.0) {
      inv_hessian.setIdentity();
      scaled = false;
      direction = -pg;
    }

    double step = 1.0;
    bool accepted = false;
    Eigen::VectorXd trial;
    double trial_value = 0.0;
    for (int b = 0; b < options.max_backtracks; ++b, step *= 0.5) {
      trial = detail::project_box(r.x + step * direction, options.bound);
      trial_value = value_and_gradient(trial, trial_grad);
      if (std::isfinite(trial_value) && trial_value <= r.value + options.armijo * r.gradient.dot(trial - r.x)) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      r.status = BfgsStatus::line_search_failed;
      r.projected_gradient_norm = detail::projected_gradient(r.x, r.gradient, options.bound).norm();
      return r;
    }

    const Eigen::VectorXd s = trial - r.x;
    const Eigen::VectorXd y = trial_grad - r.gradient;
    const double previous = r.value;
    r.x = std::move(trial);
    r.value = trial_value;
    r.gradient = trial_grad;
    r.history.push_back(r.value);

    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (!scaled) {
        inv_hessian *= sy / y.squaredNorm();
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Eigen::VectorXd hy = inv_hessian * y;
      inv_hessian += ((1.0 + rho * y.dot(hy)) * rho) * (s * s.transpose()) - rho * (hy * s.transpose() + s * hy.transpose());
    }

    if (std::abs(previous - r.value) <= options.relative_tolerance * std::max(1.0, std::abs(previous))) {
      r.projected_gradient_norm = detail::projected_gradient(r.x, r.gradient, options.bound).norm();
      r.status = BfgsStatus::objective_converged;
      ++r.iterations;
      return r;
    }
  }
  r.projected_gradient_norm = detail::projected_gradient(r.x, r.gradient, options.bound).norm();
  r.status = BfgsStatus::max_iterations;
  return r;
}

}  // namespace spincat
