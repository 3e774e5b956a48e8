#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "usjoint/das.hpp"

namespace usjoint {

/// Linear dB-to-gray mapping: -dynamic_range -> 0, 0 dB -> 255. Row-major.
std::vector<std::uint8_t> to_gray8(const BModeImage& img);

void write_pgm(const BModeImage& img, const std::filesystem::path& path);
void write_png(const BModeImage& img, const std::filesystem::path& path);

}  // namespace usjoint
