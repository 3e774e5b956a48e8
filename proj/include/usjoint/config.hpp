#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "usjoint/apodization.hpp"
#include "usjoint/geometry.hpp"
#include "usjoint/json_io.hpp"
#include "usjoint/metrics.hpp"
#include "usjoint/solver.hpp"

namespace usjoint {

/// Experiment classes with tuned hyperparameters: simulated resolution (sr),
/// experimental resolution (er), simulated contrast (sc), experimental
/// contrast (ec), carotid cross-section (cc), carotid longitudinal (cl).
enum class Preset { sr, er, sc, ec, cc, cl };

Preset parse_preset(const std::string& name);
std::string to_string(Preset p);

/// Hyperparameters for a mode and experiment class. Beamform-only uses
/// gamma_b = 1, deconv-only uses gamma_d = 1, sequential chains the two.
SolverConfig preset_config(Preset preset, SolveMode mode, SolverConfig base = {});

struct PhantomSpec {
  enum class Type { none, point, cyst } type = Type::none;
  std::vector<Point2> points;
  double amplitude = 1.0;
  Point2 center;
  double radius = 0.0;
  std::uint64_t seed = 1;
};

struct PsfSpec {
  enum class Source { system, parametric, file } source = Source::system;
  int half_axial = 6;
  int half_lateral = 3;
  double axial_fbw = 0.6;
  double lateral_sigma = 1.0;  // pixels
  std::filesystem::path path;
  // Kernel rescaling before the solve; y_DAS is divided by the same factor.
  // match_model: max |H^| equals the spectral norm of Phi.
  enum class Scaling { match_model, unit_peak, none } scaling = Scaling::match_model;
};

struct MaskSpec {
  enum class Shape { disc, annulus, rect } shape = Shape::disc;
  Point2 center;
  double inner_radius = 0.0;
  double radius = 0.0;
  int iz0 = 0, ix0 = 0, iz1 = 0, ix1 = 0;

  PixelMask build(const ImagingGrid& grid) const;
};

struct RegionConfig {
  MaskSpec roi, background;
  bool disjoint = true;
};

struct MetricsSpec {
  enum class Kind { point, cyst } kind = Kind::point;
  std::vector<RegionConfig> regions;  // empty: derive from phantom cysts
  double dynamic_range = 60.0;
  int nbins = 256;
};

struct RunConfig {
  ProbeGeometry probe;
  ImagingGrid grid;
  Eigen::Index num_samples = 0;  // 0: just enough to cover the grid
  std::vector<PlaneWaveTx> tx{PlaneWaveTx{}};
  ApodizationSpec apod;
  PhantomSpec phantom;
  std::optional<double> snr_db;
  std::uint64_t seed = 1;
  /// Fractional bandwidth of the transmit pulse shaped into simulated
  /// channel data; unset means impulsive (bare linear model).
  std::optional<double> pulse_fbw;
  PsfSpec psf;
  SolverConfig solver;
  std::optional<Preset> preset;
  MetricsSpec metrics;

  void validate() const;
};

/// Parses and validates a run configuration. Relative file paths resolve
/// against base_dir.
RunConfig run_config_from_json(const Json& j, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

/// Transmit pulse of the config, empty when none.
Eigen::VectorXd transmit_pulse(const RunConfig& cfg);

/// Smallest sample count whose time window reaches the latest delay on the
/// grid over every element and transmit.
Eigen::Index samples_to_cover(const ProbeGeometry& probe, const ImagingGrid& grid,
                              const std::vector<PlaneWaveTx>& tx);

std::vector<RegionSpec> metric_regions(const RunConfig& cfg,
                                       const std::vector<CystRegion>& cysts);

}  // namespace usjoint
