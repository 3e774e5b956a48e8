#include "usjoint/forward_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <vector>

#include "usjoint/error.hpp"

namespace usjoint {

namespace {

struct Contribution {
  int pixel;
  double distance;  // |t_i - tau_j|
  double apod;
};

}  // namespace

std::string geometry_key(const ProbeGeometry& probe, const ImagingGrid& grid,
                         const PlaneWaveTx& tx, Eigen::Index num_samples,
                         const ApodizationSpec& apod) {
  std::ostringstream os;
  os.precision(17);
  os << "probe:" << probe.num_elements << ',' << probe.pitch << ','
     << probe.sound_speed << ',' << probe.sampling_freq << ','
     << probe.center_freq << ',' << probe.t0_offset << ";grid:" << grid.nz
     << ',' << grid.nx << ',' << grid.dz << ',' << grid.dx << ','
     << grid.z_origin << ";tx:" << tx.angle << ";M:" << num_samples
     << ";apod:" << apod.describe();
  return os.str();
}

SparseSystemMatrix build_system_matrix(const ProbeGeometry& probe,
                                       const ImagingGrid& grid,
                                       const PlaneWaveTx& tx,
                                       Eigen::Index num_samples,
                                       const ApodizationSpec& apod) {
  probe.validate();
  grid.validate();
  tx.validate();
  apod.validate();
  require(num_samples >= 1, ErrorKind::invalid_argument,
          "system matrix needs at least one time sample");

  const Eigen::Index M = num_samples;
  const int N = probe.num_elements;
  const double fs = probe.sampling_freq;
  const double gate = 1.0 / fs;
  const int npix = int(grid.size());

  std::vector<double> pixel_z(npix), pixel_x(npix);
  for (int ix = 0; ix < grid.nx; ++ix)
    for (int iz = 0; iz < grid.nz; ++iz) {
      const auto j = grid.index(iz, ix);
      pixel_z[j] = grid.z(iz);
      pixel_x[j] = grid.x(ix);
    }

  SparseSystemMatrix out;
  out.num_samples = M;
  out.num_elements = N;
  out.grid = grid;
  out.fingerprint = fnv1a64(geometry_key(probe, grid, tx, M, apod));

  std::vector<int> row_ptr;
  row_ptr.reserve(std::size_t(M) * N + 1);
  row_ptr.push_back(0);
  std::vector<int> col_idx;
  std::vector<double> values;

  std::vector<std::vector<Contribution>> buckets(M);
  for (int n = 0; n < N; ++n) {
    const double xe = probe.element_x(n);
    for (auto& b : buckets) b.clear();

    for (int j = 0; j < npix; ++j) {
      const Point2 p{pixel_z[j], pixel_x[j]};
      const double tau = propagation_delay(p, xe, tx, probe.sound_speed);
      // Candidate samples, widened by one on each side; the exact gate test
      // below decides membership.
      const double center = (tau - probe.t0_offset) * fs;
      const auto lo = std::max<Eigen::Index>(0, Eigen::Index(std::floor(center)) - 2);
      const auto hi = std::min<Eigen::Index>(M - 1, Eigen::Index(std::ceil(center)) + 2);
      if (lo > hi) continue;
      double w_apod = -1.0;
      for (Eigen::Index m = lo; m <= hi; ++m) {
        const double t = double(m) / fs + probe.t0_offset;
        const double d = std::abs(t - tau);
        if (d > gate) continue;
        if (w_apod < 0.0) w_apod = apodization_weight(p, xe, apod, probe.pitch);
        buckets[m].push_back({j, d, w_apod});
      }
    }

    for (Eigen::Index m = 0; m < M; ++m) {
      const auto& row = buckets[m];
      if (!row.empty()) {
        double t_max = 0.0;
        double d_min = row.front().distance;
        for (const auto& c : row) {
          t_max = std::max(t_max, c.distance);
          d_min = std::min(d_min, c.distance);
        }
        // Weight 1 - d / t_max; a row whose contributors are all
        // equidistant (including a single contributor) keeps weight 1.
        const bool degenerate = !(t_max > d_min);
        for (const auto& c : row) {
          const double raw = degenerate ? 1.0 : 1.0 - c.distance / t_max;
          const double w = raw * c.apod;
          if (w > 0.0) {
            col_idx.push_back(c.pixel);
            values.push_back(w);
          }
        }
      }
      row_ptr.push_back(int(col_idx.size()));
    }
  }

  const Eigen::Index rows = M * N;
  Eigen::Map<const SparseRowMatrix> view(rows, npix, Eigen::Index(values.size()),
                                         row_ptr.data(), col_idx.data(),
                                         values.data());
  out.weights = view;
  out.weights.makeCompressed();
  return out;
}

Eigen::VectorXd apply_forward(const SparseSystemMatrix& model,
                              const Eigen::Ref<const Eigen::VectorXd>& x) {
  require(x.size() == model.cols(), ErrorKind::dimension_mismatch,
          "forward product: image length " + std::to_string(x.size()) +
              " != matrix columns " + std::to_string(model.cols()));
  return model.weights * x;
}

Eigen::VectorXd apply_adjoint(const SparseSystemMatrix& model,
                              const Eigen::Ref<const Eigen::VectorXd>& y) {
  require(y.size() == model.rows(), ErrorKind::dimension_mismatch,
          "adjoint product: channel length " + std::to_string(y.size()) +
              " != matrix rows " + std::to_string(model.rows()));
  return model.weights.transpose() * y;
}

double spectral_norm(const SparseSystemMatrix& model, int iterations, double tol) {
  require(iterations > 0, ErrorKind::invalid_argument, "spectral_norm: iterations must be positive");
  if (model.cols() == 0 || model.weights.nonZeros() == 0) return 0.0;
  Eigen::VectorXd v = Eigen::VectorXd::Ones(model.cols()).normalized();
  double lambda = 0.0;
  for (int k = 0; k < iterations; ++k) {
    Eigen::VectorXd w = apply_adjoint(model, apply_forward(model, v));
    const double next = v.dot(w);
    const double n = w.norm();
    if (n == 0.0) return 0.0;
    v = w / n;
    if (std::abs(next - lambda) <= tol * next) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  return std::sqrt(lambda);
}

}  // namespace usjoint
