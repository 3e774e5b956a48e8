#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "usjoint/apodization.hpp"
#include "usjoint/geometry.hpp"

namespace usjoint {

using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

/// Two-way delay: plane-wave transmit time to the pixel plus the return
/// time to the element.
template <typename Scalar>
Scalar propagation_delay(Scalar z, Scalar x, Scalar element_x, Scalar angle,
                         Scalar c) {
  using std::cos;
  using std::sin;
  using std::sqrt;
  const Scalar transmit = (z * cos(angle) + x * sin(angle)) / c;
  const Scalar dxe = x - element_x;
  const Scalar receive = sqrt(z * z + dxe * dxe) / c;
  return transmit + receive;
}

inline double propagation_delay(const Point2& pixel, double element_x,
                                const PlaneWaveTx& tx, double c) {
  return propagation_delay<double>(pixel.z, pixel.x, element_x, tx.angle, c);
}

/// Sparse pixel-to-channel weighting matrix with receive apodization applied.
/// Row r holds sample m = r % M of element n = r / M; column j is pixel j of
/// the grid (axial-major within lateral).
struct SparseSystemMatrix {
  SparseRowMatrix weights;
  Eigen::Index num_samples = 0;  // M
  int num_elements = 0;          // N
  ImagingGrid grid;
  std::uint64_t fingerprint = 0;

  Eigen::Index rows() const { return weights.rows(); }
  Eigen::Index cols() const { return weights.cols(); }
  Eigen::Index nonzeros() const { return weights.nonZeros(); }
};

/// Canonical text of the geometry a matrix is built from; hashed into the
/// fingerprint.
std::string geometry_key(const ProbeGeometry& probe, const ImagingGrid& grid,
                         const PlaneWaveTx& tx, Eigen::Index num_samples,
                         const ApodizationSpec& apod);

SparseSystemMatrix build_system_matrix(const ProbeGeometry& probe,
                                       const ImagingGrid& grid,
                                       const PlaneWaveTx& tx,
                                       Eigen::Index num_samples,
                                       const ApodizationSpec& apod);

Eigen::VectorXd apply_forward(const SparseSystemMatrix& model,
                              const Eigen::Ref<const Eigen::VectorXd>& x);
Eigen::VectorXd apply_adjoint(const SparseSystemMatrix& model,
                              const Eigen::Ref<const Eigen::VectorXd>& y);

/// Largest singular value of Phi by power iteration on Phi^T Phi, started
/// from the all-ones vector so the result is reproducible.
double spectral_norm(const SparseSystemMatrix& model, int iterations = 200,
                     double tol = 1e-9);

// Binary cache ("USJM"): header, row pointers, column indices, weights.
void write_matrix_cache(const SparseSystemMatrix& model,
                        const std::filesystem::path& path);
SparseSystemMatrix read_matrix_cache(const std::filesystem::path& path,
                                     const ImagingGrid& grid);

/// File name of a cached matrix inside `dir`: phi_<fingerprint hex>.usjm
std::filesystem::path matrix_cache_file(const std::filesystem::path& dir,
                                        std::uint64_t fingerprint);

/// Directory for cached matrices: $USJOINT_CACHE_DIR, or nullopt when unset.
std::optional<std::filesystem::path> matrix_cache_dir();

/// Loads the matrix from the cache directory when a file with a matching
/// fingerprint exists, otherwise builds it and stores it there.
SparseSystemMatrix cached_system_matrix(
    const ProbeGeometry& probe, const ImagingGrid& grid, const PlaneWaveTx& tx,
    Eigen::Index num_samples, const ApodizationSpec& apod,
    const std::optional<std::filesystem::path>& cache_dir = matrix_cache_dir());

}  // namespace usjoint
