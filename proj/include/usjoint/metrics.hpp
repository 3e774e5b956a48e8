#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "usjoint/das.hpp"
#include "usjoint/error.hpp"
#include "usjoint/phantom.hpp"

namespace usjoint {

using PixelMask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// ROI and background masks. When `disjoint` is set the masks must not
/// overlap.
struct RegionSpec {
  PixelMask roi;
  PixelMask background;
  bool disjoint = true;

  void validate() const;
};

PixelMask disc_mask(const ImagingGrid& grid, const Point2& center, double radius);
PixelMask annulus_mask(const ImagingGrid& grid, const Point2& center,
                       double inner_radius, double outer_radius);
PixelMask rect_mask(const ImagingGrid& grid, int iz0, int ix0, int iz1, int ix1);

/// ROI inside the cyst (radius * roi_scale) and a background annulus
/// between radius * bg_inner and radius * bg_outer.
RegionSpec cyst_regions(const ImagingGrid& grid, const CystRegion& cyst,
                        double roi_scale = 0.8, double bg_inner = 1.3,
                        double bg_outer = 1.8);

enum class Axis { axial, lateral };

/// Full width at half maximum of a sampled profile around index `peak`, in
/// samples, with linear interpolation of the two crossings. Throws
/// ErrorKind::unresolved when either side never drops below half maximum
/// within `window` samples of the peak.
template <typename Derived>
double fwhm_samples(const Eigen::DenseBase<Derived>& profile, Eigen::Index peak,
                    Eigen::Index window);

/// FWHM in millimeters through the local maximum nearest to (iz, ix).
double fwhm(const RfImage& env, int iz, int ix, Axis axis, int search = 3,
            int window = 64);

/// Contrast-to-noise ratio in dB. Zero contrast with nonzero spread yields
/// -infinity; zero contrast with zero spread throws.
double cnr(const Eigen::MatrixXd& img, const RegionSpec& regions);

/// Generalized CNR: one minus the overlap of the two regions' histograms on
/// shared bins spanning both.
double gcnr(const Eigen::MatrixXd& img, const RegionSpec& regions, int nbins = 256);

/// Quantile mapping of img onto reference, fitted on the ROI and applied to
/// every pixel, clamped to the reference display range.
BModeImage histogram_match(const BModeImage& img, const BModeImage& reference,
                           const PixelMask& roi);

struct TargetResolution {
  int iz = 0, ix = 0;
  double fwhm_axial_mm = 0.0;
  double fwhm_lateral_mm = 0.0;
};

struct RegionContrast {
  double cnr_db = 0.0;
  double gcnr = 0.0;
};

struct MetricsReport {
  std::string label;
  std::vector<TargetResolution> targets;
  std::vector<RegionContrast> regions;
  double mean_fwhm_axial_mm = 0.0;
  double mean_fwhm_lateral_mm = 0.0;
  double mean_cnr_db = 0.0;
  double mean_gcnr = 0.0;

  void finalize();  // recompute the averages
};

/// FWHM for each point target on the envelope of `rf`.
MetricsReport resolution_metrics(const RfImage& rf,
                                 const std::vector<PointTarget>& targets,
                                 std::string label = {});

/// CNR/gCNR for each region pair on the log-compressed envelope of `rf`
/// after histogram matching to `reference` over the background mask.
MetricsReport contrast_metrics(const RfImage& rf, const BModeImage& reference,
                               const std::vector<RegionSpec>& regions,
                               double dynamic_range = 60.0, int nbins = 256,
                               std::string label = {});

/// Aligned text table: one row per report.
std::string format_metrics_table(const std::vector<MetricsReport>& reports);

// ---------------------------------------------------------------------------

template <typename Derived>
double fwhm_samples(const Eigen::DenseBase<Derived>& profile, Eigen::Index peak,
                    Eigen::Index window) {
  const Eigen::Index n = profile.size();
  require(peak >= 0 && peak < n, ErrorKind::invalid_argument,
          "FWHM peak index outside the profile");
  const double top = double(profile(peak));
  require(top > 0.0, ErrorKind::unresolved, "FWHM: profile peak is not positive");
  const double half = 0.5 * top;

  auto crossing = [&](int dir) -> double {
    for (Eigen::Index k = 1; k <= window; ++k) {
      const Eigen::Index i = peak + dir * k;
      if (i < 0 || i >= n) break;
      const double v = double(profile(i));
      if (v < half) {
        const double prev = double(profile(i - dir));
        const double frac = (prev - half) / (prev - v);
        return double(peak) + dir * (double(k - 1) + frac);
      }
    }
    fail(ErrorKind::unresolved, "FWHM: profile does not fall below half maximum");
  };
  return crossing(+1) - crossing(-1);
}

}  // namespace usjoint
