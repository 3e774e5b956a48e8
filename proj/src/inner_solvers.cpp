#include "usjoint/inner_solvers.hpp"

#include <cmath>
#include <deque>
#include <sstream>

#include "usjoint/error.hpp"

namespace usjoint {

namespace {

[[noreturn]] void non_finite(const InnerTrace& trace) {
  std::ostringstream os;
  os << "inner solver produced non-finite values after " << trace.iterations
     << " iterations; gradient norms:";
  for (double g : trace.gradient_norms) os << ' ' << g;
  fail(ErrorKind::numerical, os.str());
}

// Conjugate residual: minimizes |r| over the Krylov space, so the gradient
// norm is nonincreasing.
InnerTrace conjugate_residual(const LinearMap& apply_a, const Eigen::VectorXd& b,
                              Eigen::VectorXd& x, const InnerSettings& s) {
  InnerTrace trace;
  const double target = s.tol * (1.0 + b.norm());
  Eigen::VectorXd r = b - apply_a(x);
  trace.gradient_norms.push_back(r.norm());
  if (!std::isfinite(trace.gradient_norms.back())) non_finite(trace);
  if (trace.gradient_norms.back() <= target) {
    trace.converged = true;
    return trace;
  }
  Eigen::VectorXd p = r;
  Eigen::VectorXd ar = apply_a(r);
  Eigen::VectorXd ap = ar;
  double r_ar = r.dot(ar);

  for (int k = 0; k < s.max_iter; ++k) {
    const double ap2 = ap.squaredNorm();
    if (!(ap2 > 0.0)) break;
    const double alpha = r_ar / ap2;
    x.noalias() += alpha * p;
    r.noalias() -= alpha * ap;
    ++trace.iterations;
    trace.gradient_norms.push_back(r.norm());
    if (!std::isfinite(trace.gradient_norms.back())) non_finite(trace);
    if (trace.gradient_norms.back() <= target) {
      trace.converged = true;
      break;
    }
    ar = apply_a(r);
    const double r_ar_next = r.dot(ar);
    const double beta = r_ar_next / r_ar;
    r_ar = r_ar_next;
    p = r + beta * p;
    ap = ar + beta * ap;
  }
  return trace;
}

// Limited-memory BFGS with exact line search along each direction (the
// objective is quadratic, so the step length is available in closed form).
InnerTrace lbfgs(const LinearMap& apply_a, const Eigen::VectorXd& b,
                 Eigen::VectorXd& x, const InnerSettings& s) {
  InnerTrace trace;
  const double target = s.tol * (1.0 + b.norm());
  Eigen::VectorXd g = apply_a(x) - b;
  trace.gradient_norms.push_back(g.norm());
  if (!std::isfinite(trace.gradient_norms.back())) non_finite(trace);
  if (trace.gradient_norms.back() <= target) {
    trace.converged = true;
    return trace;
  }

  struct Pair {
    Eigen::VectorXd s, y;
    double rho;
  };
  std::deque<Pair> memory;
  std::vector<double> alphas;

  for (int k = 0; k < s.max_iter; ++k) {
    Eigen::VectorXd d = -g;
    alphas.assign(memory.size(), 0.0);
    for (int i = int(memory.size()) - 1; i >= 0; --i) {
      alphas[i] = memory[i].rho * memory[i].s.dot(d);
      d.noalias() -= alphas[i] * memory[i].y;
    }
    if (!memory.empty()) {
      const auto& last = memory.back();
      d *= last.s.dot(last.y) / last.y.squaredNorm();
    }
    for (std::size_t i = 0; i < memory.size(); ++i) {
      const double beta = memory[i].rho * memory[i].y.dot(d);
      d.noalias() += (alphas[i] - beta) * memory[i].s;
    }

    const Eigen::VectorXd ad = apply_a(d);
    const double curvature = d.dot(ad);
    if (!(curvature > 0.0)) break;
    const double step = -g.dot(d) / curvature;
    x.noalias() += step * d;
    Eigen::VectorXd y = step * ad;
    g += y;
    ++trace.iterations;
    trace.gradient_norms.push_back(g.norm());
    if (!std::isfinite(trace.gradient_norms.back())) non_finite(trace);
    if (trace.gradient_norms.back() <= target) {
      trace.converged = true;
      break;
    }
    Eigen::VectorXd sk = step * d;
    const double sy = sk.dot(y);
    if (sy > 0.0) {
      memory.push_back({std::move(sk), std::move(y), 1.0 / sy});
      if (int(memory.size()) > s.lbfgs_memory) memory.pop_front();
    }
  }
  return trace;
}

}  // namespace

InnerTrace minimize_quadratic(const LinearMap& apply_a, const Eigen::VectorXd& b,
                              Eigen::VectorXd& x, const InnerSettings& settings) {
  require(x.size() == b.size(), ErrorKind::dimension_mismatch,
          "inner solver: start point and right-hand side differ in length");
  require(settings.max_iter >= 0 && settings.tol > 0.0, ErrorKind::invalid_argument,
          "inner solver settings out of range");
  switch (settings.method) {
    case InnerMethod::conjugate_residual:
      return conjugate_residual(apply_a, b, x, settings);
    case InnerMethod::lbfgs:
      return lbfgs(apply_a, b, x, settings);
  }
  return {};
}

}  // namespace usjoint
