#include "usjoint/picmus.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "usjoint/error.hpp"

#ifdef USJOINT_HAVE_HDF5
#include <hdf5.h>
#endif

namespace usjoint {

namespace {

const char* kDownloadHint =
    " (PICMUS datasets are not bundled; download them from the challenge "
    "website, https://www.creatis.insa-lyon.fr/EvaluationPlatform/picmus/, "
    "and pass the RF .hdf5 file path)";

}  // namespace

#ifndef USJOINT_HAVE_HDF5

bool picmus_supported() { return false; }

PicmusData ingest_picmus(const std::filesystem::path& path, const PicmusSelection&) {
  if (!std::filesystem::exists(path))
    fail(ErrorKind::not_found, "dataset not found: " + path.string() + kDownloadHint);
  fail(ErrorKind::io, "PICMUS ingestion requires a build with HDF5 support");
}

#else

namespace {

class Handle {
 public:
  Handle(hid_t id, herr_t (*close)(hid_t)) : id_(id), close_(close) {}
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() {
    if (id_ >= 0) close_(id_);
  }
  hid_t get() const { return id_; }
  bool ok() const { return id_ >= 0; }

 private:
  hid_t id_;
  herr_t (*close_)(hid_t);
};

bool has_link(hid_t loc, const std::string& name) {
  return H5Lexists(loc, name.c_str(), H5P_DEFAULT) > 0;
}

std::vector<double> read_doubles(hid_t group, const std::string& name,
                                 std::vector<hsize_t>* dims_out = nullptr) {
  if (!has_link(group, name))
    fail(ErrorKind::structure, "PICMUS file is missing dataset '" + name + "'");
  Handle ds(H5Dopen2(group, name.c_str(), H5P_DEFAULT), H5Dclose);
  if (!ds.ok()) fail(ErrorKind::structure, "cannot open dataset '" + name + "'");
  Handle space(H5Dget_space(ds.get()), H5Sclose);
  const int rank = H5Sget_simple_extent_ndims(space.get());
  std::vector<hsize_t> dims(std::max(rank, 0));
  if (rank > 0) H5Sget_simple_extent_dims(space.get(), dims.data(), nullptr);
  hsize_t count = 1;
  for (auto d : dims) count *= d;
  std::vector<double> values(count);
  if (count > 0 &&
      H5Dread(ds.get(), H5T_NATIVE_DOUBLE, H5S_ALL, H5S_ALL, H5P_DEFAULT, values.data()) < 0)
    fail(ErrorKind::structure, "cannot read dataset '" + name + "'");
  if (dims_out) *dims_out = dims;
  return values;
}

double read_scalar(hid_t group, const std::string& name) {
  const auto v = read_doubles(group, name);
  if (v.empty()) fail(ErrorKind::structure, "dataset '" + name + "' is empty");
  return v.front();
}

}  // namespace

bool picmus_supported() { return true; }

PicmusData ingest_picmus(const std::filesystem::path& path, const PicmusSelection& sel) {
  if (!std::filesystem::exists(path))
    fail(ErrorKind::not_found, "dataset not found: " + path.string() + kDownloadHint);

  H5Eset_auto2(H5E_DEFAULT, nullptr, nullptr);
  Handle file(H5Fopen(path.string().c_str(), H5F_ACC_RDONLY, H5P_DEFAULT), H5Fclose);
  if (!file.ok()) fail(ErrorKind::io, path.string() + ": not a readable HDF5 file");
  const std::string root = "/US/US_DATASET0000";
  if (!has_link(file.get(), "/US") || !has_link(file.get(), root))
    fail(ErrorKind::structure, path.string() + ": missing group " + root);
  Handle group(H5Gopen2(file.get(), root.c_str(), H5P_DEFAULT), H5Gclose);

  if (has_link(group.get(), "modulation_frequency") &&
      read_scalar(group.get(), "modulation_frequency") > 0.0)
    fail(ErrorKind::structure, path.string() +
                                   ": IQ (demodulated) data without RF samples in " +
                                   root + "/data; use the RF variant of the dataset");
  if (!has_link(group.get(), "data") || !has_link(group.get(), "data/real"))
    fail(ErrorKind::structure, path.string() + ": missing RF group " + root + "/data/real");

  PicmusData out;
  out.angles = read_doubles(group.get(), "angles");
  if (out.angles.empty()) fail(ErrorKind::structure, "PICMUS file lists no angles");

  ProbeGeometry probe;
  probe.sampling_freq = read_scalar(group.get(), "sampling_frequency");
  probe.sound_speed = read_scalar(group.get(), "sound_speed");
  probe.t0_offset = has_link(group.get(), "initial_time") ? read_scalar(group.get(), "initial_time") : 0.0;
  probe.center_freq = sel.center_freq;
  if (has_link(group.get(), "transmit_frequency"))
    probe.center_freq = read_scalar(group.get(), "transmit_frequency");

  std::vector<hsize_t> geo_dims;
  const auto geo = read_doubles(group.get(), "probe_geometry", &geo_dims);
  // Stored as 3 x N (x, y, z rows) or N x 3.
  int n_el = 0;
  std::vector<double> xs;
  if (geo_dims.size() == 2 && geo_dims[0] == 3) {
    n_el = int(geo_dims[1]);
    xs.assign(geo.begin(), geo.begin() + n_el);
  } else if (geo_dims.size() == 2 && geo_dims[1] == 3) {
    n_el = int(geo_dims[0]);
    for (int k = 0; k < n_el; ++k) xs.push_back(geo[3 * k]);
  } else {
    fail(ErrorKind::structure, "probe_geometry must be 3 x N");
  }
  probe.num_elements = n_el;
  probe.pitch = n_el > 1 ? (xs.back() - xs.front()) / (n_el - 1) : 0.0;
  probe.validate();

  if (sel.expected_sampling_freq &&
      std::abs(*sel.expected_sampling_freq - probe.sampling_freq) >
          1e-6 * probe.sampling_freq)
    fail(ErrorKind::config, "sampling frequency mismatch: file has " +
                                std::to_string(probe.sampling_freq) + " Hz, config expects " +
                                std::to_string(*sel.expected_sampling_freq) + " Hz");

  const int n_angles = int(out.angles.size());
  int idx = sel.angle_index;
  if (idx < 0) {
    idx = 0;
    for (int a = 1; a < n_angles; ++a)
      if (std::abs(out.angles[a]) < std::abs(out.angles[idx])) idx = a;
  }
  require(idx < n_angles, ErrorKind::invalid_argument,
          "angle index " + std::to_string(idx) + " out of range (file has " +
              std::to_string(n_angles) + " transmits)");
  out.angle_index = idx;

  std::vector<hsize_t> dims;
  const auto real = read_doubles(group.get(), "data/real", &dims);
  if (dims.size() == 2 && n_angles == 1) dims.insert(dims.begin(), 1);
  if (dims.size() != 3)
    fail(ErrorKind::structure, "data/real must be angles x elements x samples");
  ChannelData& ch = out.channel;
  if (dims[0] == hsize_t(n_angles) && dims[1] == hsize_t(n_el)) {
    const auto M = Eigen::Index(dims[2]);
    ch.samples.resize(M, n_el);
    const std::size_t base = std::size_t(idx) * n_el * M;
    for (int n = 0; n < n_el; ++n)
      for (Eigen::Index m = 0; m < M; ++m) ch.samples(m, n) = real[base + std::size_t(n) * M + m];
  } else if (dims[2] == hsize_t(n_angles) && dims[1] == hsize_t(n_el)) {
    const auto M = Eigen::Index(dims[0]);
    ch.samples.resize(M, n_el);
    for (Eigen::Index m = 0; m < M; ++m)
      for (int n = 0; n < n_el; ++n)
        ch.samples(m, n) = real[(std::size_t(m) * n_el + n) * n_angles + idx];
  } else {
    fail(ErrorKind::structure, "data/real dimensions do not match angles/elements");
  }
  ch.probe = probe;
  ch.tx = PlaneWaveTx{out.angles[idx]};
  return out;
}

#endif

}  // namespace usjoint
