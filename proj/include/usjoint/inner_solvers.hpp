#pragma once

#include <functional>
#include <vector>

#include <Eigen/Core>

namespace usjoint {

enum class InnerMethod { conjugate_residual, lbfgs };

struct InnerSettings {
  InnerMethod method = InnerMethod::conjugate_residual;
  int max_iter = 50;
  double tol = 1e-6;  // relative: |grad| <= tol * (1 + |b|)
  int lbfgs_memory = 8;
};

struct InnerTrace {
  int iterations = 0;
  bool converged = false;
  std::vector<double> gradient_norms;  // entry 0 is the starting point
};

using LinearMap = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Minimizes 0.5 x'Ax - b'x for symmetric positive definite A given as a
/// matrix-free map, starting from x (warm start). The gradient Ax - b is
/// driven below tol * (1 + |b|). Throws on non-finite iterates.
InnerTrace minimize_quadratic(const LinearMap& apply_a,
                              const Eigen::VectorXd& b, Eigen::VectorXd& x,
                              const InnerSettings& settings);

}  // namespace usjoint
