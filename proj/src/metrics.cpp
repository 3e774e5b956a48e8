#include "usjoint/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <sstream>

#include "usjoint/error.hpp"

namespace usjoint {

namespace {

std::vector<double> masked_values(const Eigen::MatrixXd& img, const PixelMask& mask) {
  require(mask.rows() == img.rows() && mask.cols() == img.cols(),
          ErrorKind::dimension_mismatch, "mask does not match image size");
  std::vector<double> v;
  v.reserve(std::size_t(mask.count()));
  for (Eigen::Index i = 0; i < img.size(); ++i)
    if (mask.data()[i]) v.push_back(img.data()[i]);
  return v;
}

struct Moments {
  double mean = 0.0;
  double var = 0.0;
};

Moments population_moments(const std::vector<double>& v) {
  Moments m;
  for (double x : v) m.mean += x;
  m.mean /= double(v.size());
  for (double x : v) m.var += (x - m.mean) * (x - m.mean);
  m.var /= double(v.size());
  return m;
}

// Empirical CDF position of v within sorted data, in [0, 1]. Ties map to the
// middle of their run.
double quantile_of(const std::vector<double>& sorted, double v) {
  const auto n = sorted.size();
  if (v <= sorted.front()) return 0.0;
  if (v >= sorted.back()) return 1.0;
  const auto lo = std::lower_bound(sorted.begin(), sorted.end(), v);
  const auto hi = std::upper_bound(sorted.begin(), sorted.end(), v);
  double pos;
  if (lo != hi) {
    pos = 0.5 * double((lo - sorted.begin()) + (hi - sorted.begin()) - 1);
  } else {
    const auto k = std::size_t(lo - sorted.begin());  // sorted[k-1] < v < sorted[k]
    const double a = sorted[k - 1], b = sorted[k];
    pos = double(k - 1) + (v - a) / (b - a);
  }
  return pos / double(n - 1);
}

double value_at_quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * double(sorted.size() - 1);
  const auto k = std::min<std::size_t>(std::size_t(std::floor(pos)), sorted.size() - 1);
  if (k + 1 >= sorted.size()) return sorted.back();
  const double frac = pos - double(k);
  return sorted[k] + frac * (sorted[k + 1] - sorted[k]);
}

}  // namespace

void RegionSpec::validate() const {
  require(roi.size() > 0 && roi.count() > 0, ErrorKind::invalid_argument, "ROI mask is empty");
  require(background.count() > 0, ErrorKind::invalid_argument, "background mask is empty");
  require(roi.rows() == background.rows() && roi.cols() == background.cols(),
          ErrorKind::dimension_mismatch, "ROI and background masks differ in size");
  if (disjoint)
    require(!(roi && background).any(), ErrorKind::invalid_argument,
            "ROI and background masks overlap");
}

PixelMask disc_mask(const ImagingGrid& grid, const Point2& center, double radius) {
  return annulus_mask(grid, center, -1.0, radius);
}

PixelMask annulus_mask(const ImagingGrid& grid, const Point2& center,
                       double inner_radius, double outer_radius) {
  PixelMask m(grid.nz, grid.nx);
  for (int ix = 0; ix < grid.nx; ++ix)
    for (int iz = 0; iz < grid.nz; ++iz) {
      const double dz = grid.z(iz) - center.z, dx = grid.x(ix) - center.x;
      const double r = std::sqrt(dz * dz + dx * dx);
      m(iz, ix) = r > inner_radius && r <= outer_radius;
    }
  return m;
}

PixelMask rect_mask(const ImagingGrid& grid, int iz0, int ix0, int iz1, int ix1) {
  PixelMask m = PixelMask::Constant(grid.nz, grid.nx, false);
  for (int ix = std::max(0, ix0); ix <= std::min(grid.nx - 1, ix1); ++ix)
    for (int iz = std::max(0, iz0); iz <= std::min(grid.nz - 1, iz1); ++iz)
      m(iz, ix) = true;
  return m;
}

RegionSpec cyst_regions(const ImagingGrid& grid, const CystRegion& cyst,
                        double roi_scale, double bg_inner, double bg_outer) {
  RegionSpec r;
  r.roi = disc_mask(grid, cyst.center, roi_scale * cyst.radius);
  r.background = annulus_mask(grid, cyst.center, bg_inner * cyst.radius,
                              bg_outer * cyst.radius);
  r.validate();
  return r;
}

double fwhm(const RfImage& env, int iz, int ix, Axis axis, int search, int window) {
  const auto& d = env.data;
  require(iz >= 0 && iz < d.rows() && ix >= 0 && ix < d.cols(),
          ErrorKind::invalid_argument, "FWHM target outside image");
  int bz = iz, bx = ix;
  for (int z = std::max(0, iz - search); z <= std::min<int>(int(d.rows()) - 1, iz + search); ++z)
    for (int x = std::max(0, ix - search); x <= std::min<int>(int(d.cols()) - 1, ix + search); ++x)
      if (d(z, x) > d(bz, bx)) {
        bz = z;
        bx = x;
      }
  if (axis == Axis::axial)
    return fwhm_samples(d.col(bx), bz, window) * env.grid.dz * 1e3;
  return fwhm_samples(d.row(bz), bx, window) * env.grid.dx * 1e3;
}

double cnr(const Eigen::MatrixXd& img, const RegionSpec& regions) {
  regions.validate();
  const auto a = population_moments(masked_values(img, regions.roi));
  const auto b = population_moments(masked_values(img, regions.background));
  const double num = std::abs(a.mean - b.mean);
  const double den = std::sqrt(0.5 * (a.var + b.var));
  if (num == 0.0) {
    require(den > 0.0, ErrorKind::numerical,
            "CNR undefined: equal means and zero spread in both regions");
    return -std::numeric_limits<double>::infinity();
  }
  if (den == 0.0) return std::numeric_limits<double>::infinity();
  return 20.0 * std::log10(num / den);
}

double gcnr(const Eigen::MatrixXd& img, const RegionSpec& regions, int nbins) {
  require(nbins >= 2, ErrorKind::invalid_argument, "gCNR needs at least 2 bins");
  regions.validate();
  const auto a = masked_values(img, regions.roi);
  const auto b = masked_values(img, regions.background);
  const auto [amin, amax] = std::minmax_element(a.begin(), a.end());
  const auto [bmin, bmax] = std::minmax_element(b.begin(), b.end());
  const double lo = std::min(*amin, *bmin), hi = std::max(*amax, *bmax);
  if (!(hi > lo)) return 0.0;  // both regions hold one identical value

  auto histogram = [&](const std::vector<double>& v) {
    std::vector<std::int64_t> h(std::size_t(nbins), 0);
    for (double x : v) {
      const auto k = std::int64_t(std::floor((x - lo) / (hi - lo) * nbins));
      ++h[std::size_t(std::clamp<std::int64_t>(k, 0, nbins - 1))];
    }
    return h;
  };
  // Overlap in integer counts scaled by the other region's size, so equal
  // histograms give exactly 0 and disjoint ones exactly 1.
  const auto ha = histogram(a), hb = histogram(b);
  const auto na = std::int64_t(a.size()), nb = std::int64_t(b.size());
  std::int64_t shared = 0;
  for (int k = 0; k < nbins; ++k) shared += std::min(ha[k] * nb, hb[k] * na);
  return double(na * nb - shared) / double(na * nb);
}

BModeImage histogram_match(const BModeImage& img, const BModeImage& reference,
                           const PixelMask& roi) {
  require(img.data.rows() == reference.data.rows() && img.data.cols() == reference.data.cols(),
          ErrorKind::dimension_mismatch, "histogram matching: image sizes differ");
  auto src = masked_values(img.data, roi);
  auto ref = masked_values(reference.data, roi);
  require(src.size() >= 2, ErrorKind::invalid_argument,
          "histogram matching: ROI needs at least 2 pixels");
  std::sort(src.begin(), src.end());
  std::sort(ref.begin(), ref.end());
  require(src.back() > src.front(), ErrorKind::numerical,
          "histogram matching: ROI is constant, CDF is degenerate");

  BModeImage out = img;
  out.dynamic_range = reference.dynamic_range;
  for (Eigen::Index i = 0; i < out.data.size(); ++i) {
    const double mapped = value_at_quantile(ref, quantile_of(src, img.data.data()[i]));
    out.data.data()[i] = std::clamp(mapped, -reference.dynamic_range, 0.0);
  }
  return out;
}

void MetricsReport::finalize() {
  auto mean = [](const auto& v, auto field) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (const auto& e : v) s += e.*field;
    return s / double(v.size());
  };
  mean_fwhm_axial_mm = mean(targets, &TargetResolution::fwhm_axial_mm);
  mean_fwhm_lateral_mm = mean(targets, &TargetResolution::fwhm_lateral_mm);
  mean_cnr_db = mean(regions, &RegionContrast::cnr_db);
  mean_gcnr = mean(regions, &RegionContrast::gcnr);
}

MetricsReport resolution_metrics(const RfImage& rf,
                                 const std::vector<PointTarget>& targets,
                                 std::string label) {
  MetricsReport report;
  report.label = std::move(label);
  const RfImage env = envelope(rf);
  for (const auto& t : targets) {
    TargetResolution r{t.iz, t.ix, fwhm(env, t.iz, t.ix, Axis::axial),
                       fwhm(env, t.iz, t.ix, Axis::lateral)};
    report.targets.push_back(r);
  }
  report.finalize();
  return report;
}

MetricsReport contrast_metrics(const RfImage& rf, const BModeImage& reference,
                               const std::vector<RegionSpec>& regions,
                               double dynamic_range, int nbins, std::string label) {
  MetricsReport report;
  report.label = std::move(label);
  const BModeImage bmode = log_compress(envelope(rf), dynamic_range);
  for (const auto& reg : regions) {
    const BModeImage matched = histogram_match(bmode, reference, reg.background);
    report.regions.push_back({cnr(matched.data, reg), gcnr(matched.data, reg, nbins)});
  }
  report.finalize();
  return report;
}

std::string format_metrics_table(const std::vector<MetricsReport>& reports) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "%-14s %10s %10s %10s %8s\n", "method",
                "FWHM_A(mm)", "FWHM_L(mm)", "CNR(dB)", "gCNR");
  os << line;
  for (const auto& r : reports) {
    auto cell = [](bool present, double v, const char* fmt) {
      char buf[32];
      if (present) std::snprintf(buf, sizeof buf, fmt, v); else std::snprintf(buf, sizeof buf, "-");
      return std::string(buf);
    };
    std::snprintf(line, sizeof line, "%-14s %10s %10s %10s %8s\n", r.label.c_str(),
                  cell(!r.targets.empty(), r.mean_fwhm_axial_mm, "%.3f").c_str(),
                  cell(!r.targets.empty(), r.mean_fwhm_lateral_mm, "%.3f").c_str(),
                  cell(!r.regions.empty(), r.mean_cnr_db, "%.2f").c_str(),
                  cell(!r.regions.empty(), r.mean_gcnr, "%.3f").c_str());
    os << line;
  }
  return os.str();
}

}  // namespace usjoint
