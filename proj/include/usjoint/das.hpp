#pragma once

#include <vector>

#include <Eigen/Core>

#include "usjoint/apodization.hpp"
#include "usjoint/geometry.hpp"

namespace usjoint {

/// Real image on a grid: DAS output, reconstructions, envelopes.
struct RfImage {
  Eigen::MatrixXd data;  // nz x nx
  ImagingGrid grid;
};

/// Log-compressed image in dB, values in [-dynamic_range, 0].
struct BModeImage {
  Eigen::MatrixXd data;
  double dynamic_range = 60.0;
  ImagingGrid grid;
};

/// Delay-and-sum with linear interpolation between time samples. Delays
/// outside the recorded window contribute zero.
RfImage das_beamform(const ChannelData& ch, const ImagingGrid& grid,
                     const ApodizationSpec& apod);

/// Coherent compounding: element-wise mean of RF images.
RfImage compound(const std::vector<RfImage>& images);

/// Magnitude of the analytic signal along each column (axial direction).
RfImage envelope(const RfImage& img);

BModeImage log_compress(const RfImage& env, double dynamic_range = 60.0);

}  // namespace usjoint
