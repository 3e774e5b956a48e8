#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "usjoint/das.hpp"
#include "usjoint/error.hpp"
#include "usjoint/forward_model.hpp"
#include "usjoint/inner_solvers.hpp"
#include "usjoint/psf.hpp"

namespace usjoint {

enum class SolveMode { joint, beamform_only, deconv_only, sequential };

std::string to_string(SolveMode mode);
SolveMode parse_solve_mode(const std::string& name);

struct StageParams {
  double gamma = 1.0;
  double mu = 0.1;
  double beta = 1e3;
};

struct SolverConfig {
  double gamma_d = 1.0;
  double gamma_b = 0.1;
  double mu = 0.1;
  double beta = 1e3;
  double epsilon = 1e-3;
  int max_iter = 100;
  SolveMode mode = SolveMode::joint;
  InnerSettings inner;
  /// Sequential mode: the beamforming stage runs with gamma_b, mu, beta
  /// above; the deconvolution stage runs with these.
  StageParams deconv_stage;
  double divergence_factor = 1e6;

  /// Copy with the mode's forced zeros applied (beamform_only drops the
  /// deconvolution term, deconv_only drops the beamforming term).
  SolverConfig effective() const;
  void validate() const;
};

/// ADMM iterates and per-iteration diagnostics.
struct SolverState {
  Eigen::MatrixXd u, w, z, lam1, lam2;
  int iter = 0;
  std::vector<double> objective_history;  // iter + 1 entries
  std::vector<double> residual_uz;        // |u - z| per iteration
  std::vector<double> residual_uw;        // |u - w| per iteration
  std::vector<int> inner_iterations;

  static SolverState zeros(Eigen::Index nz, Eigen::Index nx);
};

struct SolveReport {
  RfImage result;
  bool converged = false;
  int iterations = 0;
  double wall_time = 0.0;
  SolverConfig config;
  std::vector<SolverState> stages;  // one entry, two for sequential mode
  double handoff_gain = 1.0;        // sequential: scale applied to the stage-1 image
};

/// Thrown when the objective blows up; carries the history so far.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::vector<double> history)
      : Error(ErrorKind::diverged, what), history_(std::move(history)) {}
  const std::vector<double>& history() const { return history_; }

 private:
  std::vector<double> history_;
};

/// Observations of one reconstruction. Either operator may be absent when the
/// mode does not use it.
struct Problem {
  const SparseSystemMatrix* model = nullptr;
  Eigen::VectorXd y_ch;  // column-major M x N channel samples
  const Psf* psf = nullptr;
  RfImage y_das;
};

/// (gd/2)|y_das - Hx|^2 + (gb/2)|y_ch - Phi x|^2 + mu |x|_1. Terms with a
/// zero weight are skipped, so their operators may be absent.
double objective(const Eigen::MatrixXd& x, const Problem& problem,
                 const SolverConfig& cfg, const ConvOperator* conv = nullptr);

/// Soft thresholding of u + lam1/beta by mu/beta.
template <typename DerivedU, typename DerivedL>
Eigen::MatrixXd sparsity_update(const Eigen::MatrixBase<DerivedU>& u,
                                const Eigen::MatrixBase<DerivedL>& lam1,
                                double mu, double beta) {
  require(beta > 0.0, ErrorKind::invalid_argument, "beta must be positive");
  const double t = mu / beta;
  const auto v = (u + lam1 / beta).array();
  return (v.abs() - t).max(0.0) * v.sign();
}

/// Minimizes (gb/2)|y_ch - Phi z|^2 + (beta/2)|u - z + lam2/beta|^2 starting
/// from z (warm start); z is overwritten.
InnerTrace beamform_update(const SparseSystemMatrix& model,
                           const Eigen::VectorXd& y_ch, const Eigen::MatrixXd& u,
                           const Eigen::MatrixXd& lam2, double gamma_b,
                           double beta, const InnerSettings& inner,
                           Eigen::MatrixXd& z);

void multiplier_update(SolverState& state, double beta);

SolveReport solve(const SolverConfig& cfg, const Problem& problem,
                  const SolverState* initial = nullptr);

}  // namespace usjoint
