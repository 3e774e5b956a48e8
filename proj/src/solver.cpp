#include "usjoint/solver.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

namespace usjoint {

namespace {

constexpr double kTiny = 1e-30;

Eigen::Map<const Eigen::VectorXd> as_vector(const Eigen::MatrixXd& m) {
  return {m.data(), m.size()};
}

}  // namespace

std::string to_string(SolveMode mode) {
  switch (mode) {
    case SolveMode::joint: return "joint";
    case SolveMode::beamform_only: return "beamform";
    case SolveMode::deconv_only: return "deconv";
    case SolveMode::sequential: return "sequential";
  }
  return "?";
}

SolveMode parse_solve_mode(const std::string& name) {
  if (name == "joint") return SolveMode::joint;
  if (name == "beamform" || name == "beamform_only") return SolveMode::beamform_only;
  if (name == "deconv" || name == "deconv_only") return SolveMode::deconv_only;
  if (name == "sequential") return SolveMode::sequential;
  fail(ErrorKind::invalid_argument, "unknown solve mode '" + name + "'");
}

SolverConfig SolverConfig::effective() const {
  SolverConfig c = *this;
  if (mode == SolveMode::beamform_only) c.gamma_d = 0.0;
  if (mode == SolveMode::deconv_only) c.gamma_b = 0.0;
  return c;
}

void SolverConfig::validate() const {
  auto nonneg = [](double v) { return std::isfinite(v) && v >= 0.0; };
  require(nonneg(gamma_d) && nonneg(gamma_b) && nonneg(mu), ErrorKind::config,
          "gamma_d, gamma_b and mu must be finite and nonnegative");
  require(std::isfinite(beta) && beta > 0.0, ErrorKind::config, "beta must be positive");
  require(epsilon > 0.0, ErrorKind::config, "epsilon must be positive");
  require(max_iter >= 1, ErrorKind::config, "max_iter must be at least 1");
  const auto e = effective();
  if (mode != SolveMode::sequential)
    require(e.gamma_d + e.gamma_b > 0.0, ErrorKind::config,
            "at least one of gamma_d and gamma_b must be positive");
  else
    require(gamma_b > 0.0 && deconv_stage.gamma > 0.0 && deconv_stage.beta > 0.0 &&
                nonneg(deconv_stage.mu),
            ErrorKind::config, "sequential mode needs positive stage weights");
}

SolverState SolverState::zeros(Eigen::Index nz, Eigen::Index nx) {
  SolverState s;
  s.u = s.w = s.z = s.lam1 = s.lam2 = Eigen::MatrixXd::Zero(nz, nx);
  return s;
}

double objective(const Eigen::MatrixXd& x, const Problem& problem,
                 const SolverConfig& cfg, const ConvOperator* conv) {
  const auto c = cfg.effective();
  double value = 0.0;
  if (c.gamma_d > 0.0) {
    require(problem.psf || conv, ErrorKind::invalid_argument,
            "objective needs a PSF when gamma_d > 0");
    require(problem.y_das.data.rows() == x.rows() && problem.y_das.data.cols() == x.cols(),
            ErrorKind::dimension_mismatch, "objective: y_das and x differ in size");
    const Eigen::MatrixXd hx =
        conv ? conv->apply(x) : conv_apply(*problem.psf, x);
    value += 0.5 * c.gamma_d * (problem.y_das.data - hx).squaredNorm();
  }
  if (c.gamma_b > 0.0) {
    require(problem.model != nullptr, ErrorKind::invalid_argument,
            "objective needs the system matrix when gamma_b > 0");
    require(problem.y_ch.size() == problem.model->rows(), ErrorKind::dimension_mismatch,
            "objective: channel data length does not match the system matrix");
    value += 0.5 * c.gamma_b *
             (problem.y_ch - apply_forward(*problem.model, as_vector(x))).squaredNorm();
  }
  if (c.mu > 0.0) value += c.mu * x.cwiseAbs().sum();
  return value;
}

InnerTrace beamform_update(const SparseSystemMatrix& model,
                           const Eigen::VectorXd& y_ch, const Eigen::MatrixXd& u,
                           const Eigen::MatrixXd& lam2, double gamma_b,
                           double beta, const InnerSettings& inner,
                           Eigen::MatrixXd& z) {
  require(beta > 0.0, ErrorKind::invalid_argument, "beta must be positive");
  require(u.rows() == lam2.rows() && u.cols() == lam2.cols(), ErrorKind::dimension_mismatch,
          "beamform update: u and lambda2 differ in size");
  if (gamma_b == 0.0) {
    z = u + lam2 / beta;
    InnerTrace t;
    t.converged = true;
    return t;
  }
  require(u.size() == model.cols() && y_ch.size() == model.rows(),
          ErrorKind::dimension_mismatch, "beamform update: operands do not match the model");
  if (z.rows() != u.rows() || z.cols() != u.cols()) z = u;

  const Eigen::VectorXd b =
      gamma_b * apply_adjoint(model, y_ch) + beta * as_vector(u) + as_vector(lam2);
  const LinearMap normal = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    const Eigen::VectorXd pv = model.weights * v;
    Eigen::VectorXd out = model.weights.transpose() * pv;
    out *= gamma_b;
    out.noalias() += beta * v;
    return out;
  };
  Eigen::VectorXd zv = as_vector(z);
  InnerTrace trace = minimize_quadratic(normal, b, zv, inner);
  z = Eigen::Map<const Eigen::MatrixXd>(zv.data(), u.rows(), u.cols());
  return trace;
}

void multiplier_update(SolverState& state, double beta) {
  state.lam1 += beta * (state.u - state.w);
  state.lam2 += beta * (state.u - state.z);
}

namespace {

void check_problem(const SolverConfig& c, const Problem& p) {
  const auto& img = p.y_das.data;
  if (c.gamma_d > 0.0) {
    require(p.psf != nullptr, ErrorKind::invalid_argument,
            "mode " + to_string(c.mode) + " needs a PSF");
    require(img.size() > 0, ErrorKind::invalid_argument, "y_das is empty");
  }
  if (c.gamma_b > 0.0) {
    require(p.model != nullptr, ErrorKind::invalid_argument,
            "mode " + to_string(c.mode) + " needs the system matrix");
    require(p.y_ch.size() == p.model->rows(), ErrorKind::dimension_mismatch,
            "channel data length " + std::to_string(p.y_ch.size()) +
                " != system matrix rows " + std::to_string(p.model->rows()));
    if (img.size() > 0)
      require(img.size() == p.model->cols(), ErrorKind::dimension_mismatch,
              "y_das size does not match the system matrix columns");
  }
}

// One ADMM run (non-sequential modes).
SolverState run_admm(const SolverConfig& c, const Problem& p,
                     Eigen::Index nz, Eigen::Index nx,
                     const SolverState* initial, bool& converged) {
  std::optional<ConvOperator> conv;
  if (c.gamma_d > 0.0) conv.emplace(*p.psf, nz, nx);

  // The iterate that carries the reconstruction: z when only the beamforming
  // term is active (u is then a plain average of the split variables), u
  // otherwise.
  const bool track_z = c.gamma_d == 0.0;
  auto tracked = [&](const SolverState& st) -> const Eigen::MatrixXd& {
    return track_z ? st.z : st.u;
  };

  SolverState s = initial ? *initial : SolverState::zeros(nz, nx);
  require(s.u.rows() == nz && s.u.cols() == nx, ErrorKind::dimension_mismatch,
          "initial state does not match the grid");
  s.iter = 0;
  s.objective_history.assign(1, objective(tracked(s), p, c, conv ? &*conv : nullptr));
  s.residual_uz.clear();
  s.residual_uw.clear();
  s.inner_iterations.clear();
  const double obj0 = s.objective_history.front();

  const Eigen::MatrixXd empty_das;
  const Eigen::MatrixXd& y_das = c.gamma_d > 0.0 ? p.y_das.data : empty_das;

  converged = false;
  for (int it = 0; it < c.max_iter; ++it) {
    // u: deconvolution step (closed form in the Fourier domain).
    if (conv)
      s.u = conv->deconv_update(y_das, s.w, s.z, s.lam1, s.lam2, c.gamma_d, c.beta);
    else
      s.u = (c.beta * (s.w + s.z) - s.lam1 - s.lam2) / (2.0 * c.beta);
    // z: beamforming step (iterative).
    static const SparseSystemMatrix no_model;
    const auto trace = beamform_update(p.model ? *p.model : no_model, p.y_ch, s.u,
                                       s.lam2, c.gamma_b, c.beta, c.inner, s.z);
    s.inner_iterations.push_back(trace.iterations);
    // w: soft thresholding.
    s.w = sparsity_update(s.u, s.lam1, c.mu, c.beta);
    multiplier_update(s, c.beta);

    ++s.iter;
    const double obj = objective(tracked(s), p, c, conv ? &*conv : nullptr);
    s.objective_history.push_back(obj);
    s.residual_uz.push_back((s.u - s.z).norm());
    s.residual_uw.push_back((s.u - s.w).norm());

    if (!std::isfinite(obj) || !s.u.allFinite() || !s.z.allFinite()) {
      std::ostringstream os;
      os << "non-finite iterate at iteration " << s.iter;
      throw DivergenceError(os.str(), s.objective_history);
    }
    if (obj0 > 0.0 && obj > c.divergence_factor * obj0) {
      std::ostringstream os;
      os << "objective diverged at iteration " << s.iter << ": " << obj
         << " exceeds " << c.divergence_factor << "x the initial value " << obj0;
      throw DivergenceError(os.str(), s.objective_history);
    }
    const double prev = s.objective_history[s.objective_history.size() - 2];
    if (std::abs(obj - prev) / std::max(prev, kTiny) <= c.epsilon) {
      converged = true;
      break;
    }
  }
  return s;
}

}  // namespace

SolveReport solve(const SolverConfig& cfg, const Problem& problem,
                  const SolverState* initial) {
  cfg.validate();
  const auto t_start = std::chrono::steady_clock::now();

  ImagingGrid grid = problem.y_das.grid;
  if (problem.y_das.data.size() == 0 && problem.model) grid = problem.model->grid;
  const Eigen::Index nz = grid.nz, nx = grid.nx;
  require(nz > 0 && nx > 0, ErrorKind::invalid_argument, "solve: empty grid");

  SolveReport report;
  report.config = cfg;

  if (cfg.mode != SolveMode::sequential) {
    const auto c = cfg.effective();
    check_problem(c, problem);
    bool converged = false;
    report.stages.push_back(run_admm(c, problem, nz, nx, initial, converged));
    report.converged = converged;
    report.iterations = report.stages.back().iter;
  } else {
    SolverConfig first = cfg;
    first.mode = SolveMode::beamform_only;
    first = first.effective();
    check_problem(first, problem);
    bool conv1 = false;
    report.stages.push_back(run_admm(first, problem, nz, nx, initial, conv1));

    SolverConfig second = cfg;
    second.mode = SolveMode::deconv_only;
    second.gamma_d = cfg.deconv_stage.gamma;
    second.mu = cfg.deconv_stage.mu;
    second.beta = cfg.deconv_stage.beta;
    second = second.effective();
    Problem p2;
    p2.psf = problem.psf;
    // Stage-1 output is heavily damped by beta; refit its gain to the DAS
    // image so the PSF (calibrated on DAS) still describes it.
    Eigen::MatrixXd handoff = report.stages.back().z;
    const double zz = handoff.squaredNorm();
    if (problem.y_das.data.size() == handoff.size() && zz > 0.0) {
      const double g = handoff.cwiseProduct(problem.y_das.data).sum() / zz;
      if (std::isfinite(g) && g > 0.0) report.handoff_gain = g;
    }
    handoff *= report.handoff_gain;
    p2.y_das = RfImage{handoff, grid};
    check_problem(second, p2);
    bool conv2 = false;
    report.stages.push_back(run_admm(second, p2, nz, nx, nullptr, conv2));
    report.converged = conv1 && conv2;
    report.iterations = report.stages[0].iter + report.stages[1].iter;
  }

  const auto& last = report.stages.back();
  const bool z_result = cfg.mode == SolveMode::sequential ? false : cfg.effective().gamma_d == 0.0;
  report.result = RfImage{z_result ? last.z : last.u, grid};
  report.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return report;
}

}  // namespace usjoint
