#include <doctest.h>

#include <cmath>
#include <limits>

#include "support.hpp"
#include "usjoint/error.hpp"
#include "usjoint/solver.hpp"

using namespace usjoint;
using namespace testing;

namespace {

// Small SPD system: A = Q' Q + 0.1 I.
struct Quadratic {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  explicit Quadratic(int n) {
    const Eigen::MatrixXd q = random_matrix(n, n);
    a = q.transpose() * q + 0.1 * Eigen::MatrixXd::Identity(n, n);
    b = random_vector(n);
  }
  LinearMap map() const {
    return [this](const Eigen::VectorXd& v) -> Eigen::VectorXd { return a * v; };
  }
  double value(const Eigen::VectorXd& x) const { return 0.5 * x.dot(a * x) - b.dot(x); }
};

struct Setup {
  ProbeGeometry probe = tiny_probe();
  ImagingGrid grid = tiny_grid(probe);
  SparseSystemMatrix model =
      build_system_matrix(probe, grid, PlaneWaveTx{}, kTinySamples, ApodizationSpec{});
  Psf psf;
  Eigen::MatrixXd truth;
  Problem problem;

  Setup() {
    psf.kernel = Eigen::MatrixXd::Zero(3, 3);
    psf.kernel(1, 1) = 1.0;
    psf.kernel(0, 1) = psf.kernel(2, 1) = -0.3;
    psf.kernel(1, 0) = psf.kernel(1, 2) = 0.2;
    truth = Eigen::MatrixXd::Zero(grid.nz, grid.nx);
    truth(5, 4) = 1.0;
    truth(10, 11) = -0.7;
    problem.model = &model;
    problem.psf = &psf;
    problem.y_ch = apply_forward(model, vec(truth)) + 0.01 * random_vector(model.rows());
    problem.y_das = RfImage{conv_apply(psf, truth) + 0.01 * random_matrix(grid.nz, grid.nx), grid};
  }
};

SolverConfig config(SolveMode mode, double gd, double gb, double mu, double beta) {
  SolverConfig c;
  c.mode = mode;
  c.gamma_d = gd;
  c.gamma_b = gb;
  c.mu = mu;
  c.beta = beta;
  return c;
}

}  // namespace

TEST_CASE("conjugate residual gradient norms never increase") {
  for (int trial = 0; trial < 5; ++trial) {
    Quadratic q(30);
    Eigen::VectorXd x = random_vector(30);
    InnerSettings s;
    s.max_iter = 200;
    s.tol = 1e-10;
    const auto trace = minimize_quadratic(q.map(), q.b, x, s);
    CHECK(trace.converged);
    CHECK(trace.gradient_norms.size() == std::size_t(trace.iterations) + 1);
    for (std::size_t k = 1; k < trace.gradient_norms.size(); ++k)
      CHECK(trace.gradient_norms[k] <= trace.gradient_norms[k - 1] * (1 + 1e-12));
    CHECK(rel_err(x, q.a.ldlt().solve(q.b)) <= 1e-7);
  }
}

TEST_CASE("L-BFGS reaches the same minimizer and lowers the objective") {
  for (int trial = 0; trial < 5; ++trial) {
    Quadratic q(30);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(30);
    InnerSettings s;
    s.method = InnerMethod::lbfgs;
    s.max_iter = 500;
    s.tol = 1e-10;
    const auto trace = minimize_quadratic(q.map(), q.b, x, s);
    CHECK(trace.converged);
    CHECK(trace.gradient_norms.back() <= trace.gradient_norms.front());
    CHECK(q.value(x) < q.value(Eigen::VectorXd::Zero(30)));
    CHECK(rel_err(x, q.a.ldlt().solve(q.b)) <= 1e-7);
  }
}

TEST_CASE("inner solver edge cases") {
  Quadratic q(5);
  Eigen::VectorXd x = q.a.ldlt().solve(q.b);
  const auto trace = minimize_quadratic(q.map(), q.b, x, InnerSettings{});
  CHECK(trace.iterations == 0);
  CHECK(trace.converged);

  Eigen::VectorXd wrong(3);
  CHECK_THROWS_AS(minimize_quadratic(q.map(), q.b, wrong, InnerSettings{}), Error);
  Eigen::VectorXd nan_b = q.b;
  nan_b(0) = std::numeric_limits<double>::quiet_NaN();
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(5);
  CHECK_THROWS_AS(minimize_quadratic(q.map(), nan_b, x0, InnerSettings{}), Error);
}

TEST_CASE("beamforming update solves the regularized normal equations") {
  Setup s;
  const Eigen::MatrixXd phi(s.model.weights);
  for (int trial = 0; trial < 3; ++trial) {
    const double gb = uniform(0.05, 3.0), beta = uniform(1.0, 100.0);
    const Eigen::MatrixXd u = random_matrix(s.grid.nz, s.grid.nx);
    const Eigen::MatrixXd l2 = random_matrix(s.grid.nz, s.grid.nx);
    const Eigen::VectorXd y = random_vector(s.model.rows());
    InnerSettings inner;
    inner.max_iter = 1000;
    Eigen::MatrixXd z = Eigen::MatrixXd::Zero(s.grid.nz, s.grid.nx);
    const auto trace = beamform_update(s.model, y, u, l2, gb, beta, inner, z);
    CHECK(trace.converged);
    const Eigen::MatrixXd a =
        gb * phi.transpose() * phi + beta * Eigen::MatrixXd::Identity(phi.cols(), phi.cols());
    const Eigen::VectorXd b = gb * phi.transpose() * y + beta * vec(u) + vec(l2);
    CHECK(rel_err(vec(z), a.ldlt().solve(b)) <= 1e-6);
  }

  const Eigen::MatrixXd u = random_matrix(4, 4), l2 = random_matrix(4, 4);
  Eigen::MatrixXd z;
  beamform_update(SparseSystemMatrix{}, Eigen::VectorXd{}, u, l2, 0.0, 4.0, InnerSettings{}, z);
  CHECK(rel_err(z, u + l2 / 4.0) <= 1e-15);
  CHECK_THROWS_AS(
      beamform_update(s.model, Eigen::VectorXd::Zero(3), random_matrix(16, 16),
                      random_matrix(16, 16), 1.0, 1.0, InnerSettings{}, z),
      Error);
}

TEST_CASE("soft thresholding") {
  Eigen::MatrixXd u(1, 5), l = Eigen::MatrixXd::Zero(1, 5);
  u << 3.0, -3.0, 0.5, -0.5, 0.0;
  const Eigen::MatrixXd w = sparsity_update(u, l, 2.0, 2.0);  // threshold 1
  Eigen::MatrixXd expected(1, 5);
  expected << 2.0, -2.0, 0.0, 0.0, 0.0;
  CHECK(w == expected);

  // The multiplier shifts the argument: u + l / beta.
  Eigen::MatrixXd l1(1, 5);
  l1 << 2.0, 2.0, 2.0, 2.0, 2.0;
  Eigen::MatrixXd shifted(1, 5);
  shifted << 3.0, -1.0, 0.5, 0.0, 0.0;
  CHECK(sparsity_update(u, l1, 2.0, 2.0) == shifted);

  CHECK(sparsity_update(u, l, 0.0, 1.0) == u);

  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::MatrixXd a = random_matrix(6, 6), b = random_matrix(6, 6);
    const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(6, 6);
    const double mu = uniform(0.0, 2.0), beta = uniform(0.5, 3.0);
    const Eigen::MatrixXd sa = sparsity_update(a, zero, mu, beta);
    CHECK(sparsity_update(Eigen::MatrixXd(-a), zero, mu, beta) == -sa);
    CHECK((sa - sparsity_update(b, zero, mu, beta)).cwiseAbs().maxCoeff() <=
          (a - b).cwiseAbs().maxCoeff() + 1e-15);
    CHECK((sa.cwiseAbs().array() <= a.cwiseAbs().array()).all());
  }
  CHECK_THROWS_AS(sparsity_update(u, l, 1.0, 0.0), Error);
}

TEST_CASE("multiplier update") {
  SolverState st = SolverState::zeros(2, 2);
  st.u << 1, 2, 3, 4;
  st.w << 1, 1, 1, 1;
  st.z << 0, 2, 0, 2;
  st.lam1.setConstant(0.5);
  multiplier_update(st, 10.0);
  Eigen::MatrixXd l1(2, 2), l2(2, 2);
  l1 << 0.5, 10.5, 20.5, 30.5;
  l2 << 10, 0, 30, 20;
  CHECK(st.lam1 == l1);
  CHECK(st.lam2 == l2);
}

TEST_CASE("objective value") {
  Setup s;
  const auto joint = config(SolveMode::joint, 2.0, 0.5, 0.25, 10.0);
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(s.grid.nz, s.grid.nx);
  CHECK(objective(zero, s.problem, joint) ==
        doctest::Approx(s.problem.y_das.data.squaredNorm() + 0.25 * s.problem.y_ch.squaredNorm()));

  const Eigen::MatrixXd x = random_matrix(s.grid.nz, s.grid.nx);
  const Eigen::MatrixXd phi(s.model.weights);
  const double expected = 1.0 * (s.problem.y_das.data - circular_convolution(s.psf.kernel, x)).squaredNorm() +
                          0.25 * (s.problem.y_ch - phi * vec(x)).squaredNorm() +
                          0.25 * x.cwiseAbs().sum();
  CHECK(objective(x, s.problem, joint) == doctest::Approx(expected).epsilon(1e-12));

  Problem consistent = s.problem;
  consistent.y_ch = phi * vec(x);
  consistent.y_das.data = circular_convolution(s.psf.kernel, x);
  CHECK(objective(x, consistent, config(SolveMode::joint, 2.0, 0.5, 0.0, 1.0)) <= 1e-20);

  // Zero-weighted terms need no operator.
  Problem bare;
  bare.y_das = s.problem.y_das;
  bare.psf = &s.psf;
  CHECK(objective(x, bare, config(SolveMode::deconv_only, 1.0, 5.0, 0.0, 1.0)) ==
        doctest::Approx(0.5 * (s.problem.y_das.data - circular_convolution(s.psf.kernel, x)).squaredNorm()));
  CHECK_THROWS_AS(objective(x, bare, joint), Error);
}

TEST_CASE("zero data converges immediately to zero") {
  Setup s;
  Problem p = s.problem;
  p.y_ch.setZero();
  p.y_das.data.setZero();
  for (auto mode : {SolveMode::joint, SolveMode::beamform_only, SolveMode::deconv_only}) {
    const auto r = solve(config(mode, 1.0, 0.1, 0.1, 100.0), p);
    CHECK(r.converged);
    CHECK(r.iterations == 1);
    CHECK(r.result.data.isZero(0.0));
  }
}

TEST_CASE("beamforming only without sparsity is damped least squares") {
  Setup s;
  const Eigen::MatrixXd phi(s.model.weights);
  for (double beta : {10.0, 1000.0}) {
    auto c = config(SolveMode::beamform_only, 1.0, 0.7, 0.0, beta);
    c.inner.max_iter = 2000;
    c.inner.tol = 1e-10;
    const auto r = solve(c, s.problem);
    const Eigen::MatrixXd a =
        0.7 * phi.transpose() * phi + beta * Eigen::MatrixXd::Identity(phi.cols(), phi.cols());
    const Eigen::VectorXd expected = a.ldlt().solve(0.7 * phi.transpose() * s.problem.y_ch);
    CHECK(r.converged);
    CHECK(r.iterations == 2);
    CHECK(rel_err(vec(r.result.data), expected) <= 1e-4);
  }
}

TEST_CASE("ablations reduce to the single-term modes") {
  Setup s;
  auto no_deconv = config(SolveMode::joint, 0.0, 0.4, 0.05, 50.0);
  auto bf = config(SolveMode::beamform_only, 3.0, 0.4, 0.05, 50.0);
  const auto a = solve(no_deconv, s.problem);
  const auto b = solve(bf, s.problem);
  CHECK(a.iterations == b.iterations);
  CHECK(rel_err(a.result.data, b.result.data) <= 1e-8);

  auto no_bf = config(SolveMode::joint, 1.5, 0.0, 0.05, 50.0);
  auto dc = config(SolveMode::deconv_only, 1.5, 7.0, 0.05, 50.0);
  const auto c = solve(no_bf, s.problem);
  const auto d = solve(dc, s.problem);
  CHECK(c.iterations == d.iterations);
  CHECK(rel_err(c.result.data, d.result.data) <= 1e-8);
}

TEST_CASE("joint solve diagnostics and initialization independence") {
  Setup s;
  auto c = config(SolveMode::joint, 1.0, 0.2, 0.02, 5.0);
  c.max_iter = 5000;
  c.epsilon = 1e-13;
  c.inner.tol = 1e-12;
  c.inner.max_iter = 500;
  const auto from_zero = solve(c, s.problem);
  CHECK(from_zero.converged);
  const auto& st = from_zero.stages.front();
  CHECK(st.objective_history.size() == std::size_t(st.iter) + 1);
  CHECK(st.residual_uz.size() == std::size_t(st.iter));
  CHECK(st.inner_iterations.size() == std::size_t(st.iter));
  CHECK(from_zero.result.data.allFinite());
  CHECK(st.residual_uz.back() < 1e-3 * st.u.norm());
  CHECK(st.objective_history.back() < st.objective_history.front());

  SolverState init = SolverState::zeros(s.grid.nz, s.grid.nx);
  init.u = random_matrix(s.grid.nz, s.grid.nx);
  init.z = random_matrix(s.grid.nz, s.grid.nx);
  init.w = random_matrix(s.grid.nz, s.grid.nx);
  const auto from_random = solve(c, s.problem, &init);
  CHECK(from_random.converged);
  CHECK(rel_err(from_random.result.data, from_zero.result.data) <= 1e-3);

  // The reconstruction finds the two reflectors.
  Eigen::Index iz, ix;
  from_zero.result.data.cwiseAbs().maxCoeff(&iz, &ix);
  CHECK(iz == 5);
  CHECK(ix == 4);
}

TEST_CASE("divergence and invalid configurations raise") {
  Setup s;
  auto c = config(SolveMode::joint, 1.0, 0.2, 0.02, 5.0);
  c.divergence_factor = 1e-9;
  try {
    solve(c, s.problem);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.kind() == ErrorKind::diverged);
    CHECK(e.history().size() >= 2);
  }

  CHECK_THROWS_AS(solve(config(SolveMode::joint, 0.0, 0.0, 0.1, 1.0), s.problem), Error);
  CHECK_THROWS_AS(solve(config(SolveMode::joint, 1.0, 0.1, 0.1, 0.0), s.problem), Error);
  CHECK_THROWS_AS(solve(config(SolveMode::joint, -1.0, 0.1, 0.1, 1.0), s.problem), Error);
  Problem no_psf = s.problem;
  no_psf.psf = nullptr;
  CHECK_THROWS_AS(solve(config(SolveMode::joint, 1.0, 0.1, 0.1, 1.0), no_psf), Error);
  CHECK_NOTHROW(solve(config(SolveMode::beamform_only, 1.0, 0.1, 0.1, 1.0), no_psf));
  Problem nan = s.problem;
  nan.y_ch(3) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(solve(config(SolveMode::beamform_only, 1.0, 0.1, 0.1, 1.0), nan), Error);
}

TEST_CASE("sequential mode chains the two stages") {
  Setup s;
  auto c = config(SolveMode::sequential, 1.0, 0.5, 0.01, 100.0);
  c.deconv_stage = StageParams{1.0, 0.01, 10.0};
  const auto r = solve(c, s.problem);
  REQUIRE(r.stages.size() == 2);
  const Eigen::MatrixXd& z1 = r.stages[0].z;
  const double g = z1.cwiseProduct(s.problem.y_das.data).sum() / z1.squaredNorm();
  CHECK(r.handoff_gain == doctest::Approx(g).epsilon(1e-12));
  CHECK(r.iterations == r.stages[0].iter + r.stages[1].iter);

  // Stage 2 is a deconv-only solve on the rescaled stage-1 image.
  Problem p2;
  p2.psf = &s.psf;
  p2.y_das = RfImage{g * z1, s.grid};
  const auto direct = solve(config(SolveMode::deconv_only, 1.0, 0.0, 0.01, 10.0), p2);
  CHECK(rel_err(r.result.data, direct.result.data) <= 1e-12);
}

TEST_CASE("solve mode names") {
  for (auto m : {SolveMode::joint, SolveMode::beamform_only, SolveMode::deconv_only,
                 SolveMode::sequential})
    CHECK(parse_solve_mode(to_string(m)) == m);
  CHECK_THROWS_AS(parse_solve_mode("magic"), Error);
}
