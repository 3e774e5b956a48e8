#pragma once

// Small fixtures and brute-force reference implementations shared by the
// unit tests. Nothing here calls the library code it is used to check.

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "usjoint/apodization.hpp"
#include "usjoint/geometry.hpp"

namespace testing {

using usjoint::ApodizationSpec;
using usjoint::ImagingGrid;
using usjoint::PlaneWaveTx;
using usjoint::ProbeGeometry;

// 8 elements, 16 x 16 pixels starting at 5 mm, 64 samples covering the grid.
inline ProbeGeometry tiny_probe() {
  ProbeGeometry p;
  p.num_elements = 8;
  p.pitch = 0.3e-3;
  p.sound_speed = 1540.0;
  p.sampling_freq = 20.832e6;
  p.center_freq = 5.208e6;
  p.t0_offset = 2 * 5e-3 / 1540.0 - 4.0 / p.sampling_freq;
  return p;
}

inline ImagingGrid tiny_grid(const ProbeGeometry& p, int nz = 16, int nx = 16) {
  return ImagingGrid::for_probe(p, nz, nx, 5e-3);
}

inline constexpr int kTinySamples = 64;

inline std::mt19937_64& rng() {
  static std::mt19937_64 gen(20240601);
  return gen;
}

inline Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = n(rng());
  return m;
}

inline Eigen::VectorXd random_vector(Eigen::Index n) { return random_matrix(n, 1).col(0); }

inline double uniform(double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng());
}

inline double rel_err(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double scale = std::max(b.norm(), 1e-300);
  return (a - b).norm() / scale;
}

// Receive window evaluated from the closed forms: half-aperture z/(2 f#),
// never below the pitch; Hann is cos^2(pi s / 2).
inline double reference_apodization(double z, double x, double xe, const ApodizationSpec& a,
                                     double pitch) {
  if (z <= 0.0) return 0.0;
  const double half = std::max(z / (2.0 * a.f_number), pitch);
  const double s = std::abs(x - xe) / half;
  if (s > 1.0) return 0.0;
  switch (a.window) {
    case usjoint::WindowKind::rectangular:
      return 1.0;
    case usjoint::WindowKind::hanning: {
      const double c = std::cos(std::numbers::pi * s / 2.0);
      return c * c;
    }
    case usjoint::WindowKind::tukey: {
      if (a.tukey_taper <= 0.0) return 1.0;
      const double flat = 1.0 - a.tukey_taper;
      if (s <= flat) return 1.0;
      return 0.5 * (1.0 + std::cos(std::numbers::pi * (s - flat) / a.tukey_taper));
    }
  }
  return 0.0;
}

// Dense system matrix by looping over every (sample, element, pixel) triple.
inline Eigen::MatrixXd dense_phi(const ProbeGeometry& p, const ImagingGrid& g,
                                 const PlaneWaveTx& tx, int M, const ApodizationSpec& a) {
  const int N = p.num_elements;
  const int npix = g.nz * g.nx;
  Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(Eigen::Index(M) * N, npix);
  for (int n = 0; n < N; ++n) {
    const double xe = (n - 0.5 * (N - 1)) * p.pitch;
    for (int m = 0; m < M; ++m) {
      const double t = double(m) / p.sampling_freq + p.t0_offset;
      std::vector<int> cols;
      std::vector<double> dist;
      for (int ix = 0; ix < g.nx; ++ix)
        for (int iz = 0; iz < g.nz; ++iz) {
          const double z = g.z_origin + iz * g.dz;
          const double x = (ix - 0.5 * (g.nx - 1)) * g.dx;
          const double tau = (z * std::cos(tx.angle) + x * std::sin(tx.angle)) / p.sound_speed +
                             std::sqrt(z * z + (x - xe) * (x - xe)) / p.sound_speed;
          const double d = std::abs(t - tau);
          if (d <= 1.0 / p.sampling_freq) {
            cols.push_back(ix * g.nz + iz);
            dist.push_back(d);
          }
        }
      if (cols.empty()) continue;
      double t_max = 0.0, d_min = dist[0];
      for (double d : dist) {
        t_max = std::max(t_max, d);
        d_min = std::min(d_min, d);
      }
      const bool all_equal = !(t_max > d_min);
      for (std::size_t k = 0; k < cols.size(); ++k) {
        const int j = cols[k];
        const double z = g.z_origin + (j % g.nz) * g.dz;
        const double x = ((j / g.nz) - 0.5 * (g.nx - 1)) * g.dx;
        const double raw = all_equal ? 1.0 : 1.0 - dist[k] / t_max;
        phi(Eigen::Index(n) * M + m, j) = raw * reference_apodization(z, x, xe, a, p.pitch);
      }
    }
  }
  return phi;
}

// y(i, j) = sum_{a, b} k(a, b) x(i - a + ha, j - b + hb), indices wrapped.
inline Eigen::MatrixXd circular_convolution(const Eigen::MatrixXd& k, const Eigen::MatrixXd& x) {
  const int nz = int(x.rows()), nx = int(x.cols());
  const int ha = int(k.rows()) / 2, hb = int(k.cols()) / 2;
  auto wrap = [](int i, int n) { return ((i % n) + n) % n; };
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(nz, nx);
  for (int i = 0; i < nz; ++i)
    for (int j = 0; j < nx; ++j)
      for (int a = 0; a < k.rows(); ++a)
        for (int b = 0; b < k.cols(); ++b)
          y(i, j) += k(a, b) * x(wrap(i - a + ha, nz), wrap(j - b + hb, nx));
  return y;
}

// Explicit block-circulant matrix of the same convolution on vec(x).
inline Eigen::MatrixXd bccb_matrix(const Eigen::MatrixXd& k, int nz, int nx) {
  const int n = nz * nx;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  for (int q = 0; q < n; ++q) {
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(nz, nx);
    e(q % nz, q / nz) = 1.0;
    const Eigen::MatrixXd col = circular_convolution(k, e);
    h.col(q) = Eigen::Map<const Eigen::VectorXd>(col.data(), n);
  }
  return h;
}

inline Eigen::VectorXd vec(const Eigen::MatrixXd& m) {
  return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
}

inline Eigen::MatrixXd unvec(const Eigen::VectorXd& v, Eigen::Index nz, Eigen::Index nx) {
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), nz, nx);
}

}  // namespace testing
