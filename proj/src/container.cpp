#include "usjoint/container.hpp"

#include "binary_io.hpp"
#include "usjoint/error.hpp"

namespace usjoint {

namespace {

constexpr char kMagic[4] = {'U', 'S', 'J', 'D'};

std::vector<float> pack(const Eigen::MatrixXd& m) {
  std::vector<float> out;
  out.reserve(std::size_t(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(float(m(r, c)));
  return out;
}

Eigen::MatrixXd unpack(const ContainerFile& f) {
  const auto& dims = f.metadata.at("dims");
  const auto rows = dims.at(0).get<Eigen::Index>();
  const auto cols = dims.at(1).get<Eigen::Index>();
  Eigen::MatrixXd m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = double(f.payload[k++]);
  return m;
}

ContainerFile make(ContainerKind kind, const Eigen::MatrixXd& data, Json meta) {
  ContainerFile f;
  f.kind = kind;
  f.metadata = Json::object();
  f.metadata["kind"] = to_string(kind);
  f.metadata["dims"] = {data.rows(), data.cols()};
  for (auto& [k, v] : meta.items()) f.metadata[k] = v;
  f.payload = pack(data);
  return f;
}

void expect_kind(const ContainerFile& f, ContainerKind kind) {
  if (f.kind != kind)
    fail(ErrorKind::structure, "container holds '" + to_string(f.kind) +
                                   "' but '" + to_string(kind) + "' was expected");
}

Json annotations(const Phantom& ph) {
  Json points = Json::array();
  for (const auto& p : ph.points) points.push_back({p.iz, p.ix});
  Json cysts = Json::array();
  for (const auto& c : ph.cysts)
    cysts.push_back({{"z", c.center.z}, {"x", c.center.x}, {"radius", c.radius}});
  return {{"points", points}, {"cysts", cysts}};
}

}  // namespace

std::string to_string(ContainerKind kind) {
  switch (kind) {
    case ContainerKind::channel: return "channel";
    case ContainerKind::rfimage: return "rfimage";
    case ContainerKind::bmode: return "bmode";
    case ContainerKind::psf: return "psf";
    case ContainerKind::phantom: return "phantom";
    case ContainerKind::matrix: return "matrix";
  }
  return "unknown";
}

void write_container(const ContainerFile& file, const std::filesystem::path& path) {
  const auto& dims = file.metadata.at("dims");
  std::size_t expected = 1;
  for (const auto& d : dims) expected *= d.get<std::size_t>();
  require(expected == file.payload.size(), ErrorKind::structure,
          path.string() + ": payload length does not match dims");

  const std::string meta = file.metadata.dump();
  detail::ByteWriter w;
  w.put_bytes(kMagic, 4);
  w.put<std::uint16_t>(kContainerVersion);
  w.put<std::uint16_t>(static_cast<std::uint16_t>(file.kind));
  w.put<std::uint32_t>(std::uint32_t(meta.size()));
  w.put_bytes(meta.data(), meta.size());
  for (float v : file.payload) w.put<float>(v);
  detail::write_file_atomic(path, w.bytes());
}

ContainerFile read_container(const std::filesystem::path& path) {
  detail::ByteReader r(detail::read_file_bytes(path), path.string());
  if (r.remaining() < 4 || r.get_string(4) != std::string(kMagic, 4))
    fail(ErrorKind::bad_magic, path.string() + ": bad magic (not a USJD container)");
  const auto version = r.get<std::uint16_t>();
  if (version != kContainerVersion)
    fail(ErrorKind::version_mismatch, path.string() + ": container version " +
                                          std::to_string(version) + " is not supported");
  ContainerFile f;
  const auto kind = r.get<std::uint16_t>();
  if (kind < 1 || kind > 6)
    fail(ErrorKind::structure, path.string() + ": unknown kind tag " + std::to_string(kind));
  f.kind = static_cast<ContainerKind>(kind);
  const auto meta_len = r.get<std::uint32_t>();
  const std::string meta = r.get_string(meta_len);
  try {
    f.metadata = Json::parse(meta);
  } catch (const std::exception& e) {
    fail(ErrorKind::structure, path.string() + ": metadata is not valid JSON: " + e.what());
  }
  std::size_t expected = 1;
  try {
    const auto& dims = f.metadata.at("dims");
    if (!dims.is_array() || dims.empty()) throw std::runtime_error("dims must be an array");
    for (const auto& d : dims) expected *= d.get<std::size_t>();
  } catch (const std::exception& e) {
    fail(ErrorKind::structure, path.string() + ": bad dims in metadata: " + e.what());
  }
  if (r.remaining() % 4 != 0)
    fail(ErrorKind::truncated, path.string() + ": truncated payload");
  const std::size_t count = r.remaining() / 4;
  if (count < expected)
    fail(ErrorKind::truncated, path.string() + ": truncated payload (" +
                                   std::to_string(count) + " of " +
                                   std::to_string(expected) + " values)");
  if (count != expected)
    fail(ErrorKind::structure, path.string() + ": payload holds " + std::to_string(count) +
                                   " values but dims call for " + std::to_string(expected));
  f.payload.resize(count);
  for (auto& v : f.payload) v = r.get<float>();
  return f;
}

ContainerFile to_container(const ChannelData& ch) {
  return make(ContainerKind::channel, ch.samples,
              {{"units", "a.u. (rows: time samples, cols: elements)"},
               {"probe", to_json(ch.probe)},
               {"tx", to_json(ch.tx)}});
}

ContainerFile to_container(const RfImage& img) {
  return make(ContainerKind::rfimage, img.data,
              {{"units", "a.u."}, {"grid", to_json(img.grid)}});
}

ContainerFile to_container(const BModeImage& img) {
  return make(ContainerKind::bmode, img.data,
              {{"units", "dB"},
               {"dynamic_range", img.dynamic_range},
               {"grid", to_json(img.grid)}});
}

ContainerFile to_container(const Psf& psf) {
  return make(ContainerKind::psf, psf.kernel,
              {{"units", "a.u."}, {"dz", psf.dz}, {"dx", psf.dx}});
}

ContainerFile to_container(const Phantom& ph) {
  return make(ContainerKind::phantom, ph.trf,
              {{"units", "reflectivity"},
               {"grid", to_json(ph.grid)},
               {"annotations", annotations(ph)}});
}

ContainerFile matrix_container(const Eigen::MatrixXd& m, Json extra) {
  return make(ContainerKind::matrix, m, std::move(extra));
}

ChannelData channel_from(const ContainerFile& f) {
  expect_kind(f, ContainerKind::channel);
  ChannelData ch;
  ch.samples = unpack(f);
  ch.probe = probe_from_json(f.metadata.at("probe"));
  ch.tx = tx_from_json(f.metadata.at("tx"));
  require(ch.samples.cols() == ch.probe.num_elements, ErrorKind::structure,
          "channel container: column count does not match probe elements");
  return ch;
}

RfImage rf_image_from(const ContainerFile& f) {
  expect_kind(f, ContainerKind::rfimage);
  RfImage img{unpack(f), grid_from_json(f.metadata.at("grid"))};
  require(img.data.rows() == img.grid.nz && img.data.cols() == img.grid.nx,
          ErrorKind::structure, "rfimage container: dims do not match grid");
  return img;
}

BModeImage bmode_from(const ContainerFile& f) {
  expect_kind(f, ContainerKind::bmode);
  BModeImage img;
  img.data = unpack(f);
  img.dynamic_range = f.metadata.at("dynamic_range").get<double>();
  img.grid = grid_from_json(f.metadata.at("grid"));
  return img;
}

Psf psf_from(const ContainerFile& f) {
  expect_kind(f, ContainerKind::psf);
  Psf psf;
  psf.kernel = unpack(f);
  psf.dz = f.metadata.value("dz", 0.0);
  psf.dx = f.metadata.value("dx", 0.0);
  psf.validate();
  return psf;
}

Phantom phantom_from(const ContainerFile& f) {
  expect_kind(f, ContainerKind::phantom);
  Phantom ph;
  ph.trf = unpack(f);
  ph.grid = grid_from_json(f.metadata.at("grid"));
  const auto& ann = f.metadata.at("annotations");
  for (const auto& p : ann.at("points")) ph.points.push_back({p.at(0).get<int>(), p.at(1).get<int>()});
  for (const auto& c : ann.at("cysts"))
    ph.cysts.push_back({{c.at("z").get<double>(), c.at("x").get<double>()},
                        c.at("radius").get<double>()});
  return ph;
}

Eigen::MatrixXd matrix_from(const ContainerFile& f) {
  expect_kind(f, ContainerKind::matrix);
  return unpack(f);
}

}  // namespace usjoint
