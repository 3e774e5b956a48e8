#include "usjoint/image_export.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <zlib.h>

#include "binary_io.hpp"

namespace usjoint {

std::vector<std::uint8_t> to_gray8(const BModeImage& img) {
  std::vector<std::uint8_t> gray;
  gray.reserve(std::size_t(img.data.size()));
  const double dr = img.dynamic_range;
  for (Eigen::Index r = 0; r < img.data.rows(); ++r)
    for (Eigen::Index c = 0; c < img.data.cols(); ++c) {
      const double level = std::clamp((img.data(r, c) + dr) / dr, 0.0, 1.0);
      gray.push_back(std::uint8_t(std::lround(level * 255.0)));
    }
  return gray;
}

void write_pgm(const BModeImage& img, const std::filesystem::path& path) {
  const std::string header = "P5\n" + std::to_string(img.data.cols()) + " " +
                             std::to_string(img.data.rows()) + "\n255\n";
  std::vector<unsigned char> bytes(header.begin(), header.end());
  const auto gray = to_gray8(img);
  bytes.insert(bytes.end(), gray.begin(), gray.end());
  detail::write_file_atomic(path, bytes);
}

namespace {

void put_be32(std::vector<unsigned char>& out, std::uint32_t v) {
  out.push_back((v >> 24) & 0xff);
  out.push_back((v >> 16) & 0xff);
  out.push_back((v >> 8) & 0xff);
  out.push_back(v & 0xff);
}

void put_chunk(std::vector<unsigned char>& out, const char* type,
               const std::vector<unsigned char>& data) {
  put_be32(out, std::uint32_t(data.size()));
  const std::size_t start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  const auto crc = crc32(0L, out.data() + start, uInt(out.size() - start));
  put_be32(out, std::uint32_t(crc));
}

}  // namespace

void write_png(const BModeImage& img, const std::filesystem::path& path) {
  const auto width = std::uint32_t(img.data.cols());
  const auto height = std::uint32_t(img.data.rows());
  const auto gray = to_gray8(img);

  // Filter type 0 (none) per scanline.
  std::vector<unsigned char> raw;
  raw.reserve(std::size_t(height) * (width + 1));
  for (std::uint32_t r = 0; r < height; ++r) {
    raw.push_back(0);
    raw.insert(raw.end(), gray.begin() + std::ptrdiff_t(r) * width,
               gray.begin() + std::ptrdiff_t(r + 1) * width);
  }
  uLongf packed_len = compressBound(uLong(raw.size()));
  std::vector<unsigned char> packed(packed_len);
  if (compress2(packed.data(), &packed_len, raw.data(), uLong(raw.size()), 9) != Z_OK)
    fail(ErrorKind::io, path.string() + ": PNG compression failed");
  packed.resize(packed_len);

  std::vector<unsigned char> out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  std::vector<unsigned char> ihdr;
  put_be32(ihdr, width);
  put_be32(ihdr, height);
  ihdr.insert(ihdr.end(), {8, 0, 0, 0, 0});  // 8-bit grayscale
  put_chunk(out, "IHDR", ihdr);
  put_chunk(out, "IDAT", packed);
  put_chunk(out, "IEND", {});
  detail::write_file_atomic(path, out);
}

}  // namespace usjoint
