#include "usjoint/das.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#include <unsupported/Eigen/FFT>

#include "usjoint/error.hpp"
#include "usjoint/forward_model.hpp"

namespace usjoint {

RfImage das_beamform(const ChannelData& ch, const ImagingGrid& grid,
                     const ApodizationSpec& apod) {
  const auto& probe = ch.probe;
  probe.validate();
  grid.validate();
  apod.validate();
  require(ch.samples.cols() == probe.num_elements, ErrorKind::dimension_mismatch,
          "channel data has " + std::to_string(ch.samples.cols()) +
              " columns but the probe has " + std::to_string(probe.num_elements) +
              " elements");
  require(ch.samples.rows() >= 1, ErrorKind::dimension_mismatch,
          "channel data has no samples");

  const double fs = probe.sampling_freq;
  const Eigen::Index M = ch.samples.rows();
  RfImage out{Eigen::MatrixXd::Zero(grid.nz, grid.nx), grid};

  for (int ix = 0; ix < grid.nx; ++ix) {
    for (int iz = 0; iz < grid.nz; ++iz) {
      const Point2 p{grid.z(iz), grid.x(ix)};
      double acc = 0.0;
      for (int n = 0; n < probe.num_elements; ++n) {
        const double xe = probe.element_x(n);
        const double w = apodization_weight(p, xe, apod, probe.pitch);
        if (w == 0.0) continue;
        const double tau = propagation_delay(p, xe, ch.tx, probe.sound_speed);
        const double s = (tau - probe.t0_offset) * fs;
        if (!(s >= 0.0) || s > double(M - 1)) continue;
        const auto m0 = Eigen::Index(std::floor(s));
        const double frac = s - double(m0);
        double v = ch.samples(m0, n);
        if (m0 + 1 < M) v += frac * (ch.samples(m0 + 1, n) - v);
        acc += w * v;
      }
      out.data(iz, ix) = acc;
    }
  }
  return out;
}

RfImage compound(const std::vector<RfImage>& images) {
  require(!images.empty(), ErrorKind::invalid_argument,
          "compounding needs at least one image");
  const auto& first = images.front();
  RfImage out{first.data, first.grid};
  // Running mean: identical inputs reproduce themselves bit for bit.
  for (std::size_t k = 1; k < images.size(); ++k) {
    const auto& img = images[k];
    require(img.data.rows() == first.data.rows() && img.data.cols() == first.data.cols(),
            ErrorKind::dimension_mismatch, "compounded images must share a grid");
    out.data += (img.data - out.data) / double(k + 1);
  }
  return out;
}

RfImage envelope(const RfImage& img) {
  const Eigen::Index nz = img.data.rows();
  require(nz >= 4, ErrorKind::invalid_argument,
          "envelope detection needs at least 4 axial samples");
  RfImage out{Eigen::MatrixXd(nz, img.data.cols()), img.grid};

  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> time(nz), spec(nz);
  for (Eigen::Index col = 0; col < img.data.cols(); ++col) {
    for (Eigen::Index i = 0; i < nz; ++i) time[i] = img.data(i, col);
    fft.fwd(spec, time);
    // One-sided spectrum: keep DC (and Nyquist for even lengths), double the
    // positive frequencies, drop the negative ones.
    const Eigen::Index half = (nz + 1) / 2;
    for (Eigen::Index k = 1; k < half; ++k) spec[k] *= 2.0;
    for (Eigen::Index k = nz / 2 + 1; k < nz; ++k) spec[k] = 0.0;
    fft.inv(time, spec);
    for (Eigen::Index i = 0; i < nz; ++i) out.data(i, col) = std::abs(time[i]);
  }
  return out;
}

BModeImage log_compress(const RfImage& env, double dynamic_range) {
  require(dynamic_range > 0.0, ErrorKind::invalid_argument,
          "dynamic range must be positive");
  BModeImage out;
  out.dynamic_range = dynamic_range;
  out.grid = env.grid;
  out.data.resize(env.data.rows(), env.data.cols());
  const double peak = env.data.size() ? env.data.cwiseAbs().maxCoeff() : 0.0;
  if (!(peak > 0.0)) {
    out.data.setConstant(-dynamic_range);
    return out;
  }
  for (Eigen::Index i = 0; i < env.data.size(); ++i) {
    const double ratio = std::abs(env.data.data()[i]) / peak;
    const double db = ratio > 0.0 ? 20.0 * std::log10(ratio)
                                  : -std::numeric_limits<double>::infinity();
    out.data.data()[i] = std::clamp(db, -dynamic_range, 0.0);
  }
  return out;
}

}  // namespace usjoint
