#include <cstdlib>
#include <sstream>

#include "binary_io.hpp"
#include "usjoint/forward_model.hpp"

namespace usjoint {

namespace {
constexpr char kMatrixMagic[4] = {'U', 'S', 'J', 'M'};
constexpr std::uint16_t kMatrixVersion = 1;
}  // namespace

void write_matrix_cache(const SparseSystemMatrix& model,
                        const std::filesystem::path& path) {
  require(model.weights.isCompressed(), ErrorKind::structure,
          "matrix must be compressed before caching");
  detail::ByteWriter w;
  w.put_bytes(kMatrixMagic, 4);
  w.put<std::uint16_t>(kMatrixVersion);
  w.put<std::uint16_t>(0);
  w.put<std::uint64_t>(model.fingerprint);
  w.put<std::uint64_t>(std::uint64_t(model.rows()));
  w.put<std::uint64_t>(std::uint64_t(model.cols()));
  w.put<std::uint64_t>(std::uint64_t(model.num_samples));
  w.put<std::uint64_t>(std::uint64_t(model.num_elements));
  w.put<std::uint64_t>(std::uint64_t(model.nonzeros()));
  const auto* outer = model.weights.outerIndexPtr();
  for (Eigen::Index r = 0; r <= model.rows(); ++r) w.put<std::int64_t>(outer[r]);
  const auto* inner = model.weights.innerIndexPtr();
  const auto* vals = model.weights.valuePtr();
  for (Eigen::Index k = 0; k < model.nonzeros(); ++k) w.put<std::int32_t>(inner[k]);
  for (Eigen::Index k = 0; k < model.nonzeros(); ++k) w.put<double>(vals[k]);
  detail::write_file_atomic(path, w.bytes());
}

SparseSystemMatrix read_matrix_cache(const std::filesystem::path& path,
                                     const ImagingGrid& grid) {
  detail::ByteReader r(detail::read_file_bytes(path), path.string());
  if (r.get_string(4) != std::string(kMatrixMagic, 4))
    fail(ErrorKind::bad_magic, path.string() + ": bad magic (expected USJM)");
  const auto version = r.get<std::uint16_t>();
  if (version != kMatrixVersion)
    fail(ErrorKind::version_mismatch,
         path.string() + ": unsupported matrix cache version " + std::to_string(version));
  r.get<std::uint16_t>();
  SparseSystemMatrix m;
  m.fingerprint = r.get<std::uint64_t>();
  const auto rows = r.get<std::uint64_t>();
  const auto cols = r.get<std::uint64_t>();
  m.num_samples = Eigen::Index(r.get<std::uint64_t>());
  m.num_elements = int(r.get<std::uint64_t>());
  const auto nnz = r.get<std::uint64_t>();
  if (rows != std::uint64_t(m.num_samples) * std::uint64_t(m.num_elements) ||
      cols != std::uint64_t(grid.size()))
    fail(ErrorKind::structure, path.string() + ": matrix dims do not match grid");
  if (r.remaining() != (rows + 1) * 8 + nnz * 12)
    fail(ErrorKind::truncated, path.string() + ": payload size does not match header");

  std::vector<int> outer(rows + 1);
  for (auto& v : outer) v = int(r.get<std::int64_t>());
  std::vector<int> inner(nnz);
  for (auto& v : inner) {
    v = r.get<std::int32_t>();
    if (v < 0 || std::uint64_t(v) >= cols)
      fail(ErrorKind::structure, path.string() + ": column index out of range");
  }
  std::vector<double> vals(nnz);
  for (auto& v : vals) v = r.get<double>();
  if (outer.front() != 0 || std::uint64_t(outer.back()) != nnz)
    fail(ErrorKind::structure, path.string() + ": inconsistent row pointers");

  Eigen::Map<const SparseRowMatrix> view(Eigen::Index(rows), Eigen::Index(cols),
                                         Eigen::Index(nnz), outer.data(),
                                         inner.data(), vals.data());
  m.weights = view;
  m.grid = grid;
  return m;
}

std::filesystem::path matrix_cache_file(const std::filesystem::path& dir,
                                        std::uint64_t fingerprint) {
  std::ostringstream name;
  name << "phi_" << std::hex << fingerprint << ".usjm";
  return dir / name.str();
}

std::optional<std::filesystem::path> matrix_cache_dir() {
  if (const char* dir = std::getenv("USJOINT_CACHE_DIR"); dir && *dir)
    return std::filesystem::path(dir);
  return std::nullopt;
}

SparseSystemMatrix cached_system_matrix(
    const ProbeGeometry& probe, const ImagingGrid& grid, const PlaneWaveTx& tx,
    Eigen::Index num_samples, const ApodizationSpec& apod,
    const std::optional<std::filesystem::path>& cache_dir) {
  if (!cache_dir) return build_system_matrix(probe, grid, tx, num_samples, apod);

  const auto fp = fnv1a64(geometry_key(probe, grid, tx, num_samples, apod));
  const auto path = matrix_cache_file(*cache_dir, fp);
  if (std::filesystem::exists(path)) {
    auto m = read_matrix_cache(path, grid);
    if (m.fingerprint == fp) return m;
  }
  auto m = build_system_matrix(probe, grid, tx, num_samples, apod);
  std::filesystem::create_directories(*cache_dir);
  write_matrix_cache(m, path);
  return m;
}

}  // namespace usjoint
