#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "usjoint/das.hpp"
#include "usjoint/json_io.hpp"
#include "usjoint/phantom.hpp"
#include "usjoint/psf.hpp"

namespace usjoint {

enum class ContainerKind : std::uint16_t {
  channel = 1,
  rfimage = 2,
  bmode = 3,
  psf = 4,
  phantom = 5,
  matrix = 6,
};

std::string to_string(ContainerKind kind);

inline constexpr std::uint16_t kContainerVersion = 1;

/// "USJD" file: magic, u16 version, u16 kind, u32 metadata length, UTF-8 JSON
/// metadata, then a little-endian float32 payload in row-major order whose
/// shape is metadata["dims"].
struct ContainerFile {
  ContainerKind kind = ContainerKind::matrix;
  Json metadata = Json::object();
  std::vector<float> payload;
};

void write_container(const ContainerFile& file, const std::filesystem::path& path);
ContainerFile read_container(const std::filesystem::path& path);

ContainerFile to_container(const ChannelData& ch);
ContainerFile to_container(const RfImage& img);
ContainerFile to_container(const BModeImage& img);
ContainerFile to_container(const Psf& psf);
ContainerFile to_container(const Phantom& ph);
ContainerFile matrix_container(const Eigen::MatrixXd& m, Json extra = Json::object());

ChannelData channel_from(const ContainerFile& f);
RfImage rf_image_from(const ContainerFile& f);
BModeImage bmode_from(const ContainerFile& f);
Psf psf_from(const ContainerFile& f);
Phantom phantom_from(const ContainerFile& f);
Eigen::MatrixXd matrix_from(const ContainerFile& f);

}  // namespace usjoint
