#pragma once

#include <complex>

#include <Eigen/Core>

#include "usjoint/apodization.hpp"
#include "usjoint/forward_model.hpp"
#include "usjoint/geometry.hpp"

namespace usjoint {

/// Spatially invariant point spread function. Odd dimensions, centered.
struct Psf {
  Eigen::MatrixXd kernel;
  double dz = 0.0;  // grid spacing the kernel was sampled on (meters)
  double dx = 0.0;

  Eigen::Index half_axial() const { return kernel.rows() / 2; }
  Eigen::Index half_lateral() const { return kernel.cols() / 2; }
  void validate() const;
};

/// Separable Gaussian-modulated cosine (axial) times Gaussian (lateral),
/// unit peak. Axial samples are spaced 1/fs apart, matching the DAS grid.
Psf make_parametric_psf(double f0, double fs, double axial_fbw,
                        double lateral_sigma_px, double dz = 0.0,
                        double dx = 0.0);

/// Gaussian-modulated cosine sampled at 1/fs with unit peak; the -6 dB
/// spectral width is axial_fbw * f0.
Eigen::VectorXd gaussian_pulse(double f0, double fs, double axial_fbw);

/// DAS response to a unit reflector at (iz, ix), cropped to
/// (2*half_axial+1) x (2*half_lateral+1) around it. The kernel keeps the
/// absolute gain of the beamformer so y_DAS ~ H x holds in amplitude.
Psf make_system_psf(const SparseSystemMatrix& model, const ProbeGeometry& probe,
                    const PlaneWaveTx& tx, const ApodizationSpec& apod, int iz,
                    int ix, int half_axial, int half_lateral,
                    const Eigen::VectorXd& pulse = {});

/// Circular 2-D convolution with a centered kernel on a fixed image size,
/// diagonalized by the 2-D DFT.
class ConvOperator {
 public:
  using ComplexMatrix = Eigen::MatrixXcd;

  ConvOperator(const Psf& psf, Eigen::Index nz, Eigen::Index nx);

  Eigen::Index rows() const { return nz_; }
  Eigen::Index cols() const { return nx_; }
  const ComplexMatrix& transfer() const { return transfer_; }

  Eigen::MatrixXd apply(const Eigen::MatrixXd& x, bool adjoint = false) const;

  /// Minimizer of (gd/2)|y - Hu|^2 + (beta/2)|u - w + l1/beta|^2
  ///             + (beta/2)|u - z + l2/beta|^2.
  Eigen::MatrixXd deconv_update(const Eigen::MatrixXd& y_das,
                                const Eigen::MatrixXd& w,
                                const Eigen::MatrixXd& z,
                                const Eigen::MatrixXd& lam1,
                                const Eigen::MatrixXd& lam2, double gamma_d,
                                double beta) const;

 private:
  Eigen::Index nz_, nx_;
  ComplexMatrix transfer_;
};

Eigen::MatrixXd conv_apply(const Psf& psf, const Eigen::MatrixXd& x,
                           bool adjoint = false);

Eigen::MatrixXd deconv_update(const Eigen::MatrixXd& y_das, const Psf& psf,
                              const Eigen::MatrixXd& w, const Eigen::MatrixXd& z,
                              const Eigen::MatrixXd& lam1,
                              const Eigen::MatrixXd& lam2, double gamma_d,
                              double beta);

namespace fft {
Eigen::MatrixXcd forward2(const Eigen::MatrixXcd& x);
Eigen::MatrixXcd inverse2(const Eigen::MatrixXcd& x);
}  // namespace fft

}  // namespace usjoint
