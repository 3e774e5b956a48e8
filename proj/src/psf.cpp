#include "usjoint/psf.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "usjoint/das.hpp"
#include "usjoint/error.hpp"
#include "usjoint/phantom.hpp"

namespace usjoint {

namespace fft {

namespace {

enum class Direction { forward, inverse };

Eigen::MatrixXcd transform2(const Eigen::MatrixXcd& x, Direction dir) {
  Eigen::FFT<double> engine;
  Eigen::MatrixXcd out = x;
  std::vector<std::complex<double>> in, res;

  // A length-1 DFT is the identity (and kissfft crashes on it).
  in.resize(x.rows());
  for (Eigen::Index c = 0; c < x.cols() && x.rows() > 1; ++c) {
    for (Eigen::Index r = 0; r < x.rows(); ++r) in[r] = x(r, c);
    if (dir == Direction::forward) engine.fwd(res, in); else engine.inv(res, in);
    for (Eigen::Index r = 0; r < x.rows(); ++r) out(r, c) = res[r];
  }
  in.resize(x.cols());
  for (Eigen::Index r = 0; r < x.rows() && x.cols() > 1; ++r) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) in[c] = out(r, c);
    if (dir == Direction::forward) engine.fwd(res, in); else engine.inv(res, in);
    for (Eigen::Index c = 0; c < x.cols(); ++c) out(r, c) = res[c];
  }
  return out;
}

}  // namespace

Eigen::MatrixXcd forward2(const Eigen::MatrixXcd& x) {
  return transform2(x, Direction::forward);
}
Eigen::MatrixXcd inverse2(const Eigen::MatrixXcd& x) {
  return transform2(x, Direction::inverse);
}

}  // namespace fft

void Psf::validate() const {
  require(kernel.size() > 0 && kernel.rows() % 2 == 1 && kernel.cols() % 2 == 1,
          ErrorKind::invalid_argument, "PSF kernel dimensions must be odd");
  require(kernel.allFinite(), ErrorKind::invalid_argument,
          "PSF kernel has non-finite entries");
  require(kernel.cwiseAbs().maxCoeff() > 0.0, ErrorKind::invalid_argument,
          "PSF kernel is identically zero");
}

Eigen::VectorXd gaussian_pulse(double f0, double fs, double axial_fbw) {
  require(f0 > 0.0 && f0 < fs / 2.0, ErrorKind::invalid_argument,
          "pulse center frequency must lie in (0, fs/2)");
  require(axial_fbw > 0.0 && axial_fbw <= 2.0, ErrorKind::invalid_argument,
          "fractional bandwidth must lie in (0, 2]");

  // -6 dB (half amplitude) full bandwidth of a Gaussian spectrum
  // exp(-f^2 / (2 sf^2)) is 2 sf sqrt(2 ln 2).
  const double bw = axial_fbw * f0;
  const double sigma_f = bw / (2.0 * std::sqrt(2.0 * std::log(2.0)));
  const double sigma_t = 1.0 / (2.0 * std::numbers::pi * sigma_f);
  const int half_a = std::max(1, int(std::ceil(3.0 * sigma_t * fs)));
  Eigen::VectorXd axial(2 * half_a + 1);
  for (int m = -half_a; m <= half_a; ++m) {
    const double t = m / fs;
    axial[m + half_a] = std::exp(-t * t / (2.0 * sigma_t * sigma_t)) *
                        std::cos(2.0 * std::numbers::pi * f0 * t);
  }
  return axial;
}

Psf make_parametric_psf(double f0, double fs, double axial_fbw,
                        double lateral_sigma_px, double dz, double dx) {
  require(lateral_sigma_px > 0.0, ErrorKind::invalid_argument,
          "lateral sigma must be positive");
  const Eigen::VectorXd axial = gaussian_pulse(f0, fs, axial_fbw);
  const int half_a = int(axial.size() / 2);
  const int half_l = 3.0 * lateral_sigma_px < 0.5 ? 0 : int(std::ceil(3.0 * lateral_sigma_px));
  Eigen::VectorXd lateral(2 * half_l + 1);
  for (int k = -half_l; k <= half_l; ++k)
    lateral[k + half_l] =
        half_l == 0 ? 1.0
                    : std::exp(-double(k * k) / (2.0 * lateral_sigma_px * lateral_sigma_px));

  Psf psf;
  psf.kernel = axial * lateral.transpose();
  psf.kernel /= psf.kernel(half_a, half_l);
  psf.dz = dz;
  psf.dx = dx;
  return psf;
}

Psf make_system_psf(const SparseSystemMatrix& model, const ProbeGeometry& probe,
                    const PlaneWaveTx& tx, const ApodizationSpec& apod, int iz,
                    int ix, int half_axial, int half_lateral,
                    const Eigen::VectorXd& pulse) {
  const auto& grid = model.grid;
  require(iz >= 0 && iz < grid.nz && ix >= 0 && ix < grid.nx,
          ErrorKind::invalid_argument, "PSF reference pixel outside grid");
  require(half_axial >= 0 && half_lateral >= 0 && 2 * half_axial + 1 <= grid.nz &&
              2 * half_lateral + 1 <= grid.nx,
          ErrorKind::invalid_argument, "PSF support exceeds the grid");

  Eigen::VectorXd impulse = Eigen::VectorXd::Zero(grid.size());
  impulse[grid.index(iz, ix)] = 1.0;
  const Eigen::VectorXd y = apply_forward(model, impulse);
  ChannelData ch{Eigen::Map<const Eigen::MatrixXd>(y.data(), model.num_samples,
                                                   model.num_elements),
                 tx, probe};
  if (pulse.size() > 0) ch.samples = convolve_columns(ch.samples, pulse);
  const RfImage img = das_beamform(ch, grid, apod);

  Psf psf;
  psf.kernel = Eigen::MatrixXd::Zero(2 * half_axial + 1, 2 * half_lateral + 1);
  for (int a = -half_axial; a <= half_axial; ++a)
    for (int b = -half_lateral; b <= half_lateral; ++b) {
      const int r = iz + a, c = ix + b;
      if (r >= 0 && r < grid.nz && c >= 0 && c < grid.nx)
        psf.kernel(a + half_axial, b + half_lateral) = img.data(r, c);
    }
  psf.dz = grid.dz;
  psf.dx = grid.dx;
  psf.validate();
  return psf;
}

ConvOperator::ConvOperator(const Psf& psf, Eigen::Index nz, Eigen::Index nx)
    : nz_(nz), nx_(nx) {
  psf.validate();
  require(psf.kernel.rows() <= nz && psf.kernel.cols() <= nx,
          ErrorKind::invalid_argument, "PSF kernel is larger than the image");
  const auto ha = psf.half_axial(), hl = psf.half_lateral();
  Eigen::MatrixXcd embedded = Eigen::MatrixXcd::Zero(nz, nx);
  for (Eigen::Index p = 0; p < psf.kernel.rows(); ++p)
    for (Eigen::Index q = 0; q < psf.kernel.cols(); ++q) {
      const auto r = ((p - ha) % nz + nz) % nz;
      const auto c = ((q - hl) % nx + nx) % nx;
      embedded(r, c) += psf.kernel(p, q);
    }
  transfer_ = fft::forward2(embedded);
}

Eigen::MatrixXd ConvOperator::apply(const Eigen::MatrixXd& x, bool adjoint) const {
  require(x.rows() == nz_ && x.cols() == nx_, ErrorKind::dimension_mismatch,
          "convolution input does not match operator size");
  Eigen::MatrixXcd spec = fft::forward2(x.cast<std::complex<double>>());
  if (adjoint)
    spec.array() *= transfer_.array().conjugate();
  else
    spec.array() *= transfer_.array();
  return fft::inverse2(spec).real();
}

Eigen::MatrixXd ConvOperator::deconv_update(const Eigen::MatrixXd& y_das,
                                            const Eigen::MatrixXd& w,
                                            const Eigen::MatrixXd& z,
                                            const Eigen::MatrixXd& lam1,
                                            const Eigen::MatrixXd& lam2,
                                            double gamma_d, double beta) const {
  require(beta > 0.0, ErrorKind::invalid_argument, "beta must be positive");
  require(gamma_d >= 0.0, ErrorKind::invalid_argument, "gamma_d must be nonnegative");
  for (const auto* m : {&y_das, &w, &z, &lam1, &lam2})
    require(m->rows() == nz_ && m->cols() == nx_, ErrorKind::dimension_mismatch,
            "deconvolution update: image dimensions differ");

  const Eigen::MatrixXd split = beta * (w + z) - lam1 - lam2;
  if (gamma_d == 0.0) return split / (2.0 * beta);
  Eigen::MatrixXcd rhs = fft::forward2(split.cast<std::complex<double>>());
  const Eigen::MatrixXcd y_hat = fft::forward2(y_das.cast<std::complex<double>>());
  rhs.array() += gamma_d * transfer_.array().conjugate() * y_hat.array();
  const Eigen::ArrayXXd denom = gamma_d * transfer_.array().abs2() + 2.0 * beta;
  rhs.array() /= denom.cast<std::complex<double>>();
  return fft::inverse2(rhs).real();
}

Eigen::MatrixXd conv_apply(const Psf& psf, const Eigen::MatrixXd& x, bool adjoint) {
  return ConvOperator(psf, x.rows(), x.cols()).apply(x, adjoint);
}

Eigen::MatrixXd deconv_update(const Eigen::MatrixXd& y_das, const Psf& psf,
                              const Eigen::MatrixXd& w, const Eigen::MatrixXd& z,
                              const Eigen::MatrixXd& lam1,
                              const Eigen::MatrixXd& lam2, double gamma_d,
                              double beta) {
  require(beta > 0.0, ErrorKind::invalid_argument, "beta must be positive");
  return ConvOperator(psf, y_das.rows(), y_das.cols())
      .deconv_update(y_das, w, z, lam1, lam2, gamma_d, beta);
}

}  // namespace usjoint
