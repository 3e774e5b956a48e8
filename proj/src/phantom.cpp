#include "usjoint/phantom.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "usjoint/error.hpp"

namespace usjoint {

namespace {

std::string describe(const Point2& p) {
  std::ostringstream os;
  os << "(z=" << p.z << " m, x=" << p.x << " m)";
  return os.str();
}

// Box-Muller on a fixed engine: std::normal_distribution is not specified
// bit-for-bit across standard libraries.
class GaussianSource {
 public:
  explicit GaussianSource(std::uint64_t seed) : engine_(seed) {}

  double next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

 private:
  double uniform() { return double(engine_() >> 11) * 0x1.0p-53; }

  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace

Phantom make_point_phantom(const ImagingGrid& grid,
                           const std::vector<Point2>& points,
                           double amplitude) {
  grid.validate();
  Phantom ph;
  ph.grid = grid;
  ph.trf = Eigen::MatrixXd::Zero(grid.nz, grid.nx);
  for (const auto& p : points) {
    int iz = 0, ix = 0;
    if (!grid.nearest(p, iz, ix))
      fail(ErrorKind::invalid_argument, "point target outside grid: " + describe(p));
    ph.trf(iz, ix) += amplitude;
    ph.points.push_back({iz, ix});
  }
  return ph;
}

Phantom make_cyst_phantom(const ImagingGrid& grid, const Point2& center,
                          double radius, std::uint64_t seed) {
  grid.validate();
  require(radius > 0.0, ErrorKind::invalid_argument, "cyst radius must be > 0");
  require(grid.contains(center), ErrorKind::invalid_argument,
          "cyst center outside grid: " + describe(center));
  Phantom ph;
  ph.grid = grid;
  ph.trf.resize(grid.nz, grid.nx);
  GaussianSource gauss(seed);
  const double r2 = radius * radius;
  for (int ix = 0; ix < grid.nx; ++ix)
    for (int iz = 0; iz < grid.nz; ++iz) {
      const double g = gauss.next();  // drawn for every pixel: layout-stable
      const double dz = grid.z(iz) - center.z;
      const double dx = grid.x(ix) - center.x;
      ph.trf(iz, ix) = (dz * dz + dx * dx <= r2) ? 0.0 : g;
    }
  ph.cysts.push_back({center, radius});
  return ph;
}

Eigen::MatrixXd convolve_columns(const Eigen::MatrixXd& traces,
                                 const Eigen::VectorXd& kernel) {
  require(kernel.size() % 2 == 1, ErrorKind::invalid_argument,
          "pulse length must be odd");
  const Eigen::Index half = kernel.size() / 2;
  const Eigen::Index M = traces.rows();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(M, traces.cols());
  for (Eigen::Index c = 0; c < traces.cols(); ++c)
    for (Eigen::Index m = 0; m < M; ++m) {
      double acc = 0.0;
      for (Eigen::Index k = -half; k <= half; ++k) {
        const Eigen::Index src = m - k;
        if (src >= 0 && src < M) acc += kernel[k + half] * traces(src, c);
      }
      out(m, c) = acc;
    }
  return out;
}

ChannelData simulate_channel_data(const Phantom& phantom,
                                  const SparseSystemMatrix& model,
                                  const ProbeGeometry& probe,
                                  const PlaneWaveTx& tx,
                                  std::optional<double> snr_db,
                                  std::uint64_t seed,
                                  const Eigen::VectorXd& pulse) {
  require(model.cols() == phantom.trf.size(), ErrorKind::dimension_mismatch,
          "phantom has " + std::to_string(phantom.trf.size()) +
              " pixels but the model expects " + std::to_string(model.cols()));
  require(model.num_elements == probe.num_elements, ErrorKind::dimension_mismatch,
          "model element count does not match probe");

  const Eigen::Map<const Eigen::VectorXd> x(phantom.trf.data(), phantom.trf.size());
  Eigen::VectorXd y = apply_forward(model, x);
  if (pulse.size() > 0) {
    const Eigen::MatrixXd shaped = convolve_columns(
        Eigen::Map<const Eigen::MatrixXd>(y.data(), model.num_samples, model.num_elements),
        pulse);
    y = Eigen::Map<const Eigen::VectorXd>(shaped.data(), shaped.size());
  }

  if (snr_db) {
    const double signal_power = y.squaredNorm() / double(y.size());
    const double noise_power = signal_power / std::pow(10.0, *snr_db / 10.0);
    const double sigma = std::sqrt(noise_power);
    GaussianSource gauss(seed);
    Eigen::VectorXd noise(y.size());
    for (Eigen::Index i = 0; i < noise.size(); ++i) noise[i] = gauss.next();
    if (pulse.size() > 0) {
      // receive noise passes through the same transducer band as the echoes
      const Eigen::MatrixXd banded = convolve_columns(
          Eigen::Map<const Eigen::MatrixXd>(noise.data(), model.num_samples, model.num_elements),
          pulse);
      noise = Eigen::Map<const Eigen::VectorXd>(banded.data(), banded.size());
    }
    // Rescale the realized noise so the empirical SNR matches exactly.
    const double realized = noise.squaredNorm() / double(noise.size());
    if (realized > 0.0 && signal_power > 0.0)
      noise *= sigma / std::sqrt(realized);
    else
      noise.setZero();
    y += noise;
  }

  ChannelData ch;
  ch.samples = Eigen::Map<Eigen::MatrixXd>(y.data(), model.num_samples,
                                           model.num_elements);
  ch.tx = tx;
  ch.probe = probe;
  return ch;
}

}  // namespace usjoint
