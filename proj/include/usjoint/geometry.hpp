#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Core>

namespace usjoint {

/// Lateral (x) and axial (z) coordinates in meters.
struct Point2 {
  double z = 0.0;
  double x = 0.0;
};

/// Linear array probe. Element k sits at x = (k - (N-1)/2) * pitch.
struct ProbeGeometry {
  int num_elements = 128;
  double pitch = 0.3e-3;
  double sound_speed = 1540.0;
  double sampling_freq = 20.832e6;
  double center_freq = 5.208e6;
  double t0_offset = 0.0;

  double element_x(int k) const {
    return (k - 0.5 * (num_elements - 1)) * pitch;
  }
  void validate() const;
};

struct PlaneWaveTx {
  double angle = 0.0;  // radians, 0 = normal incidence
  void validate() const;
};

/// Pixel grid. Image vectors are stored axial-major within lateral
/// (pixel (iz, ix) lives at index ix * nz + iz), i.e. an Eigen column-major
/// nz x nx matrix.
struct ImagingGrid {
  int nz = 0;
  int nx = 0;
  double dz = 0.0;
  double dx = 0.0;
  double z_origin = 0.0;

  /// dz = c / (2 fs), dx = pitch, lateral positions centered like the probe.
  static ImagingGrid for_probe(const ProbeGeometry& probe, int nz, int nx,
                               double z_origin);

  Eigen::Index size() const { return Eigen::Index(nz) * nx; }
  double z(int iz) const { return z_origin + iz * dz; }
  double x(int ix) const { return (ix - 0.5 * (nx - 1)) * dx; }
  Eigen::Index index(int iz, int ix) const {
    return Eigen::Index(ix) * nz + iz;
  }
  bool contains(const Point2& p) const;
  /// Nearest node, or false when p lies outside the half-pixel-padded extent.
  bool nearest(const Point2& p, int& iz, int& ix) const;
  void validate() const;
};

/// Raw RF channel data: rows are time samples, columns are elements.
/// Sample m corresponds to t = m / fs + t0_offset.
struct ChannelData {
  Eigen::MatrixXd samples;
  PlaneWaveTx tx;
  ProbeGeometry probe;

  Eigen::Index num_samples() const { return samples.rows(); }
  double sample_time(Eigen::Index m) const {
    return double(m) / probe.sampling_freq + probe.t0_offset;
  }
};

/// Stable fingerprint of everything that determines the system matrix.
std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace usjoint
