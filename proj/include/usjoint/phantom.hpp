#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "usjoint/forward_model.hpp"
#include "usjoint/geometry.hpp"

namespace usjoint {

struct PointTarget {
  int iz = 0;
  int ix = 0;
};

struct CystRegion {
  Point2 center;
  double radius = 0.0;
};

/// Ground-truth reflectivity on a grid plus the regions metrics are taken on.
struct Phantom {
  ImagingGrid grid;
  Eigen::MatrixXd trf;  // nz x nx
  std::vector<PointTarget> points;
  std::vector<CystRegion> cysts;
};

/// Unit impulses (scaled by amplitude) snapped to the nearest grid node.
/// Impulses landing on the same node accumulate.
Phantom make_point_phantom(const ImagingGrid& grid,
                           const std::vector<Point2>& points,
                           double amplitude = 1.0);

/// i.i.d. standard Gaussian scatterers with an anechoic disc.
Phantom make_cyst_phantom(const ImagingGrid& grid, const Point2& center,
                          double radius, std::uint64_t seed);

/// y = Phi * trf reshaped to M x N, plus white Gaussian noise at snr_db
/// relative to the noiseless channel power. A nonempty `pulse` (odd length,
/// centered) is convolved along time into every channel and also shapes the
/// noise; an empty pulse keeps the bare linear model with white noise.
ChannelData simulate_channel_data(const Phantom& phantom,
                                  const SparseSystemMatrix& model,
                                  const ProbeGeometry& probe,
                                  const PlaneWaveTx& tx,
                                  std::optional<double> snr_db,
                                  std::uint64_t seed,
                                  const Eigen::VectorXd& pulse = {});

/// Zero-phase linear convolution of every column with an odd-length,
/// centered kernel; samples past the record ends are treated as zero.
Eigen::MatrixXd convolve_columns(const Eigen::MatrixXd& traces,
                                 const Eigen::VectorXd& kernel);

}  // namespace usjoint
