#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "usjoint/geometry.hpp"

namespace usjoint {

struct PicmusSelection {
  int angle_index = -1;  // -1: the transmit closest to normal incidence
  std::optional<double> expected_sampling_freq;  // consistency check
  double center_freq = 5.208e6;  // used when the file does not record one
};

struct PicmusData {
  ChannelData channel;
  std::vector<double> angles;  // every transmit angle in the file (radians)
  int angle_index = 0;
};

bool picmus_supported();

/// Reads one plane-wave transmit of RF channel data from a PICMUS-layout
/// HDF5 file (group /US/US_DATASET0000).
PicmusData ingest_picmus(const std::filesystem::path& path,
                         const PicmusSelection& selection = {});

}  // namespace usjoint
