#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "support.hpp"
#include "usjoint/error.hpp"
#include "usjoint/metrics.hpp"

using namespace usjoint;
using namespace testing;

namespace {

ImagingGrid square_grid(int nz, int nx, double d = 1e-4) {
  ImagingGrid g;
  g.nz = nz;
  g.nx = nx;
  g.dz = d;
  g.dx = d;
  g.z_origin = 0.01;
  return g;
}

// Left half ROI, right half background.
RegionSpec halves(int nz, int nx) {
  RegionSpec r;
  r.roi = PixelMask::Constant(nz, nx, false);
  r.background = PixelMask::Constant(nz, nx, false);
  r.roi.leftCols(nx / 2).setConstant(true);
  r.background.rightCols(nx - nx / 2).setConstant(true);
  return r;
}

}  // namespace

TEST_CASE("CNR closed form") {
  // ROI: mean 1, std 0.5; background: mean 0, std 0.5.
  Eigen::MatrixXd img(4, 4);
  img << 0.5, 1.5, -0.5, 0.5,
         1.5, 0.5, 0.5, -0.5,
         0.5, 1.5, -0.5, 0.5,
         1.5, 0.5, 0.5, -0.5;
  const auto r = halves(4, 4);
  CHECK(cnr(img, r) == doctest::Approx(20 * std::log10(2.0)).epsilon(1e-12));
  CHECK(cnr(img, r) == doctest::Approx(6.0206).epsilon(1e-5));

  RegionSpec swapped{r.background, r.roi};
  CHECK(cnr(img, swapped) == doctest::Approx(cnr(img, r)).epsilon(1e-14));

  Eigen::MatrixXd equal_means = img;
  equal_means.rightCols(2).array() += 1.0;
  CHECK(cnr(equal_means, r) == -std::numeric_limits<double>::infinity());

  try {
    cnr(Eigen::MatrixXd::Constant(4, 4, 2.0), r);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::numerical);
  }

  Eigen::MatrixXd flat = Eigen::MatrixXd::Zero(4, 4);
  flat.leftCols(2).setOnes();
  CHECK(cnr(flat, r) == std::numeric_limits<double>::infinity());
}

TEST_CASE("gCNR extremes and invariance") {
  const int n = 100;
  const auto r = halves(n, n);
  Eigen::MatrixXd img = random_matrix(n, n);
  img.rightCols(n / 2) = img.leftCols(n / 2);
  CHECK(gcnr(img, r) == 0.0);

  Eigen::MatrixXd separated = img;
  separated.leftCols(n / 2).array() += 100.0;
  CHECK(gcnr(separated, r) == 1.0);

  Eigen::MatrixXd partial = random_matrix(n, n);
  partial.leftCols(n / 2).array() += 1.5;
  const double g = gcnr(partial, r, 64);
  CHECK(g > 0.3);
  CHECK(g < 0.9);
  const double g_swapped = gcnr(partial, RegionSpec{r.background, r.roi}, 64);
  CHECK(g_swapped == doctest::Approx(g).epsilon(1e-12));
  // Positive affine maps keep the binning.
  CHECK(std::abs(gcnr(Eigen::MatrixXd(3.0 * partial.array() + 7.0), r, 64) - g) <= 1e-3);
  // A monotone curve moves samples across bins but not by much.
  const Eigen::MatrixXd shifted = partial.array() - partial.minCoeff() + 1.0;
  const double g0 = gcnr(shifted, r, 64);
  CHECK(std::abs(gcnr(Eigen::MatrixXd(shifted.array().pow(1.3)), r, 64) - g0) <= 0.05);

  CHECK_THROWS_AS(gcnr(img, r, 1), Error);
  RegionSpec overlapping{r.roi, r.roi};
  CHECK_THROWS_AS(gcnr(img, overlapping), Error);
  overlapping.disjoint = false;
  CHECK(gcnr(img, overlapping) == 0.0);
  CHECK_THROWS_AS(gcnr(img, RegionSpec{PixelMask::Constant(n, n, false), r.background}), Error);
}

TEST_CASE("FWHM of sampled profiles") {
  const auto g = square_grid(101, 101);
  RfImage env{Eigen::MatrixXd::Zero(101, 101), g};
  for (int i = 0; i < 101; ++i)
    for (int j = 0; j < 101; ++j)
      env.data(i, j) = std::exp(-0.5 * ((i - 50) * (i - 50) / 16.0 + (j - 50) * (j - 50) / 4.0));
  const double expected_axial = 2 * std::sqrt(2 * std::log(2.0)) * 4 * 0.1;
  CHECK(fwhm(env, 50, 50, Axis::axial) == doctest::Approx(expected_axial).epsilon(0.02));
  CHECK(fwhm(env, 50, 50, Axis::lateral) == doctest::Approx(expected_axial / 2).epsilon(0.02));
  // Snaps to the local maximum near the requested pixel.
  CHECK(fwhm(env, 52, 49, Axis::axial) == fwhm(env, 50, 50, Axis::axial));

  RfImage flipped{env.data.colwise().reverse(), g};
  CHECK(fwhm(flipped, 50, 50, Axis::axial) == doctest::Approx(fwhm(env, 50, 50, Axis::axial)).epsilon(1e-12));

  RfImage stretched = env;
  stretched.grid.dz *= 2.5;
  CHECK(fwhm(stretched, 50, 50, Axis::axial) ==
        doctest::Approx(2.5 * fwhm(env, 50, 50, Axis::axial)).epsilon(1e-12));

  RfImage impulse{Eigen::MatrixXd::Zero(11, 11), square_grid(11, 11)};
  impulse.data(5, 5) = 1.0;
  CHECK(fwhm(impulse, 5, 5, Axis::axial) <= 2 * 0.1);
  CHECK(fwhm(impulse, 5, 5, Axis::lateral) == doctest::Approx(0.1));

  Eigen::VectorXd tri(5);
  tri << 0, 1, 2, 1, 0;
  CHECK(fwhm_samples(tri, 2, 10) == doctest::Approx(2.0));

  RfImage flat{Eigen::MatrixXd::Ones(11, 11), square_grid(11, 11)};
  try {
    fwhm(flat, 5, 5, Axis::axial);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::unresolved);
  }
  CHECK_THROWS_AS(fwhm(flat, 50, 5, Axis::axial), Error);
}

TEST_CASE("histogram matching") {
  const int n = 32;
  const auto g = square_grid(n, n);
  BModeImage ref{Eigen::MatrixXd(random_matrix(n, n).array() * 5.0 - 30.0), 60.0, g};
  const PixelMask all = PixelMask::Constant(n, n, true);

  const auto same = histogram_match(ref, ref, all);
  CHECK(rel_err(same.data, ref.data) <= 1e-12);

  BModeImage offset = ref;
  offset.data.array() -= 5.0;
  CHECK(rel_err(histogram_match(offset, ref, all).data, ref.data) <= 1e-12);

  BModeImage other{Eigen::MatrixXd(random_matrix(n, n).array().cube() - 20.0), 40.0, g};
  const auto matched = histogram_match(other, ref, all);
  CHECK(matched.dynamic_range == 60.0);
  CHECK(matched.data.maxCoeff() <= 0.0);
  CHECK(matched.data.minCoeff() >= -60.0);
  for (int k = 0; k < 200; ++k) {
    const int a = int(uniform(0, n * n)), b = int(uniform(0, n * n));
    if (other.data.data()[a] < other.data.data()[b])
      CHECK(matched.data.data()[a] <= matched.data.data()[b]);
  }
  CHECK(rel_err(histogram_match(matched, ref, all).data, matched.data) <= 1e-12);
  // Matched values take on the reference distribution.
  std::vector<double> mv(matched.data.data(), matched.data.data() + n * n);
  std::vector<double> rv(ref.data.data(), ref.data.data() + n * n);
  std::sort(mv.begin(), mv.end());
  std::sort(rv.begin(), rv.end());
  CHECK(mv.front() == doctest::Approx(rv.front()));
  CHECK(mv.back() == doctest::Approx(rv.back()));
  CHECK(mv[n * n / 2] == doctest::Approx(rv[n * n / 2]));

  BModeImage constant{Eigen::MatrixXd::Constant(n, n, -10.0), 60.0, g};
  CHECK_THROWS_AS(histogram_match(constant, ref, all), Error);
  BModeImage small{Eigen::MatrixXd::Zero(4, 4), 60.0, square_grid(4, 4)};
  CHECK_THROWS_AS(histogram_match(small, ref, all), Error);
}

TEST_CASE("masks") {
  const auto g = square_grid(41, 41);
  const Point2 c{g.z(20), g.x(20)};
  const auto disc = disc_mask(g, c, 5.05e-4);
  CHECK(disc.count() == 81);  // lattice points with i^2 + j^2 <= 25
  CHECK(disc(20, 20));
  CHECK(disc(25, 20));
  CHECK_FALSE(disc(25, 21));
  const auto ring = annulus_mask(g, c, 5.05e-4, 1e-3);
  CHECK_FALSE((ring && disc).any());
  CHECK(rect_mask(g, 2, 3, 4, 7).count() == 15);
  CHECK(rect_mask(g, -5, -5, 100, 0).count() == 41);

  const auto regions = cyst_regions(g, CystRegion{c, 1e-3});
  CHECK(regions.roi.count() > 0);
  CHECK_FALSE((regions.roi && regions.background).any());
}

TEST_CASE("report aggregation and table") {
  const auto g = square_grid(64, 64);
  RfImage rf{Eigen::MatrixXd::Zero(64, 64), g};
  for (int i = 0; i < 64; ++i)
    for (int j = 0; j < 64; ++j)
      rf.data(i, j) = std::cos(2 * std::numbers::pi * 0.25 * i) *
                      (std::exp(-0.5 * ((i - 20) * (i - 20) / 4.0 + (j - 20) * (j - 20))) +
                       std::exp(-0.5 * ((i - 40) * (i - 40) / 4.0 + (j - 44) * (j - 44))));
  const auto rep = resolution_metrics(rf, {PointTarget{20, 20}, PointTarget{40, 44}}, "das");
  REQUIRE(rep.targets.size() == 2);
  CHECK(rep.mean_fwhm_axial_mm ==
        doctest::Approx(0.5 * (rep.targets[0].fwhm_axial_mm + rep.targets[1].fwhm_axial_mm)));
  CHECK(rep.targets[0].fwhm_axial_mm == doctest::Approx(0.471).epsilon(0.05));

  MetricsReport contrast;
  contrast.label = "joint";
  contrast.regions = {{3.0, 0.5}, {5.0, 0.7}};
  contrast.finalize();
  CHECK(contrast.mean_cnr_db == 4.0);
  CHECK(contrast.mean_gcnr == doctest::Approx(0.6));

  const auto table = format_metrics_table({rep, contrast});
  CHECK(table.find("FWHM_A(mm)") != std::string::npos);
  CHECK(table.find("das") != std::string::npos);
  CHECK(table.find("0.600") != std::string::npos);
  CHECK(table.find("4.00") != std::string::npos);
}

TEST_CASE("contrast metrics on identical regions") {
  const auto g = square_grid(32, 32);
  RfImage rf{random_matrix(32, 32), g};
  const auto ref = log_compress(envelope(rf));
  RegionSpec same{PixelMask::Constant(32, 32, true), PixelMask::Constant(32, 32, true), false};
  const auto rep = contrast_metrics(rf, ref, {same});
  REQUIRE(rep.regions.size() == 1);
  CHECK(rep.regions[0].gcnr == 0.0);
  CHECK(rep.regions[0].cnr_db == -std::numeric_limits<double>::infinity());
}
