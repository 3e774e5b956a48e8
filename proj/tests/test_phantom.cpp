#include <doctest.h>

#include <numbers>

#include "support.hpp"
#include "usjoint/error.hpp"
#include "usjoint/phantom.hpp"

using namespace usjoint;
using namespace testing;

TEST_CASE("point phantom placement") {
  const auto p = tiny_probe();
  const auto g = tiny_grid(p);

  const auto empty = make_point_phantom(g, {});
  CHECK(empty.trf.rows() == g.nz);
  CHECK(empty.trf.cols() == g.nx);
  CHECK(empty.trf.isZero(0.0));

  const auto one = make_point_phantom(g, {Point2{g.z(5), g.x(9)}});
  CHECK((one.trf.array() != 0.0).count() == 1);
  CHECK(one.trf(5, 9) == 1.0);
  REQUIRE(one.points.size() == 1);
  CHECK(one.points[0].iz == 5);
  CHECK(one.points[0].ix == 9);

  // Off-node positions snap to the nearest node and duplicates accumulate.
  const auto two = make_point_phantom(
      g, {Point2{g.z(3) + 0.3 * g.dz, g.x(2)}, Point2{g.z(3) - 0.2 * g.dz, g.x(2) + 0.1 * g.dx}});
  CHECK(two.trf(3, 2) == 2.0);
  CHECK((two.trf.array() != 0.0).count() == 1);

  const auto scaled = make_point_phantom(g, {Point2{g.z(0), g.x(0)}}, 0.25);
  CHECK(scaled.trf(0, 0) == 0.25);

  CHECK_THROWS_AS(make_point_phantom(g, {Point2{1.0, 0.0}}), Error);
}

TEST_CASE("cyst phantom statistics") {
  ProbeGeometry p = tiny_probe();
  p.num_elements = 256;
  auto g = ImagingGrid::for_probe(p, 256, 256, 5e-3);
  g.dx = g.dz;  // square pixels so the disc spans many of them both ways
  const Point2 center{g.z(128), g.x(128)};
  const double radius = 60 * g.dz;

  const auto a = make_cyst_phantom(g, center, radius, 7);
  const auto b = make_cyst_phantom(g, center, radius, 7);
  const auto c = make_cyst_phantom(g, center, radius, 8);
  CHECK(a.trf == b.trf);
  CHECK(a.trf != c.trf);
  REQUIRE(a.cysts.size() == 1);

  const double expected = std::numbers::pi * radius * radius / (g.nz * g.dz * g.nx * g.dx);
  const double zeros = double((a.trf.array() == 0.0).count()) / double(a.trf.size());
  CHECK(std::abs(zeros - expected) <= 0.02);

  // Every pixel inside the disc is zero and the background is roughly N(0, 1).
  double sum = 0.0, sq = 0.0;
  int n = 0;
  for (int ix = 0; ix < g.nx; ++ix)
    for (int iz = 0; iz < g.nz; ++iz) {
      const double dz = g.z(iz) - center.z, dx = g.x(ix) - center.x;
      if (dz * dz + dx * dx <= radius * radius) {
        CHECK(a.trf(iz, ix) == 0.0);
      } else {
        sum += a.trf(iz, ix);
        sq += a.trf(iz, ix) * a.trf(iz, ix);
        ++n;
      }
    }
  CHECK(std::abs(sum / n) < 0.02);
  CHECK(std::abs(sq / n - 1.0) < 0.03);

  const auto covered = make_cyst_phantom(g, center, 1.0, 3);
  CHECK(covered.trf.isZero(0.0));

  CHECK_THROWS_AS(make_cyst_phantom(g, center, 0.0, 1), Error);
  CHECK_THROWS_AS(make_cyst_phantom(g, Point2{1.0, 0.0}, radius, 1), Error);
}

namespace {

struct TinySetup {
  ProbeGeometry probe = tiny_probe();
  ImagingGrid grid = tiny_grid(probe);
  SparseSystemMatrix model =
      build_system_matrix(probe, grid, PlaneWaveTx{}, kTinySamples, ApodizationSpec{});
};

Eigen::VectorXd flat(const ChannelData& ch) { return vec(ch.samples); }

}  // namespace

TEST_CASE("noiseless simulation is the linear model") {
  TinySetup s;
  Phantom ph = make_point_phantom(s.grid, {});

  const auto zero = simulate_channel_data(ph, s.model, s.probe, PlaneWaveTx{}, std::nullopt, 1);
  CHECK(zero.samples.rows() == kTinySamples);
  CHECK(zero.samples.cols() == s.probe.num_elements);
  CHECK(zero.samples.isZero(0.0));

  ph = make_point_phantom(s.grid, {Point2{s.grid.z(8), s.grid.x(6)}});
  const auto impulse = simulate_channel_data(ph, s.model, s.probe, PlaneWaveTx{}, std::nullopt, 1);
  const Eigen::VectorXd column = Eigen::MatrixXd(s.model.weights).col(s.grid.index(8, 6));
  CHECK(flat(impulse) == column);

  Phantom p1 = ph, p2 = ph, p12 = ph;
  p1.trf = random_matrix(s.grid.nz, s.grid.nx);
  p2.trf = random_matrix(s.grid.nz, s.grid.nx);
  p12.trf = 2.0 * p1.trf - 3.0 * p2.trf;
  const auto y1 = flat(simulate_channel_data(p1, s.model, s.probe, PlaneWaveTx{}, std::nullopt, 1));
  const auto y2 = flat(simulate_channel_data(p2, s.model, s.probe, PlaneWaveTx{}, std::nullopt, 1));
  const auto y12 = flat(simulate_channel_data(p12, s.model, s.probe, PlaneWaveTx{}, std::nullopt, 1));
  CHECK(rel_err(y12, 2.0 * y1 - 3.0 * y2) <= 1e-10);
}

TEST_CASE("noise level and reproducibility") {
  TinySetup s;
  Phantom ph = make_point_phantom(s.grid, {});
  ph.trf = random_matrix(s.grid.nz, s.grid.nx);
  const auto clean = flat(simulate_channel_data(ph, s.model, s.probe, PlaneWaveTx{}, std::nullopt, 1));

  for (double snr : {0.0, 10.0, -5.0}) {
    const auto noisy = flat(simulate_channel_data(ph, s.model, s.probe, PlaneWaveTx{}, snr, 5));
    const double ratio = clean.squaredNorm() / (noisy - clean).squaredNorm();
    CHECK(std::abs(ratio / std::pow(10.0, snr / 10.0) - 1.0) <= 0.05);
  }

  const auto a = simulate_channel_data(ph, s.model, s.probe, PlaneWaveTx{}, 3.0, 42);
  const auto b = simulate_channel_data(ph, s.model, s.probe, PlaneWaveTx{}, 3.0, 42);
  const auto c = simulate_channel_data(ph, s.model, s.probe, PlaneWaveTx{}, 3.0, 43);
  CHECK(a.samples == b.samples);
  CHECK(a.samples != c.samples);
}

TEST_CASE("pulse shaping") {
  TinySetup s;
  Phantom ph = make_point_phantom(s.grid, {Point2{s.grid.z(8), s.grid.x(8)}});
  const auto bare = simulate_channel_data(ph, s.model, s.probe, PlaneWaveTx{}, std::nullopt, 1);
  Eigen::VectorXd pulse(5);
  pulse << -0.25, 0.5, 1.0, 0.5, -0.25;
  const auto shaped =
      simulate_channel_data(ph, s.model, s.probe, PlaneWaveTx{}, std::nullopt, 1, pulse);

  // Direct zero-padded convolution oracle.
  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(bare.samples.rows(), bare.samples.cols());
  for (Eigen::Index c = 0; c < expected.cols(); ++c)
    for (Eigen::Index i = 0; i < expected.rows(); ++i)
      for (Eigen::Index k = 0; k < pulse.size(); ++k) {
        const Eigen::Index src = i - (k - 2);
        if (src >= 0 && src < expected.rows()) expected(i, c) += pulse(k) * bare.samples(src, c);
      }
  CHECK(rel_err(shaped.samples, expected) <= 1e-13);

  Eigen::VectorXd even(4);
  even.setOnes();
  CHECK_THROWS_AS(convolve_columns(bare.samples, even), Error);
}
