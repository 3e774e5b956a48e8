#include "usjoint/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "usjoint/error.hpp"
#include "usjoint/forward_model.hpp"
#include "usjoint/psf.hpp"

namespace usjoint {

namespace {

void check_keys(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) fail(ErrorKind::config, where + ": expected an object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) fail(ErrorKind::config, where + ": unknown key '" + key + "'");
}

Point2 point_from(const Json& j) {
  if (!j.is_array() || j.size() != 2)
    fail(ErrorKind::config, "points are [z, x] pairs in meters");
  return {j.at(0).get<double>(), j.at(1).get<double>()};
}

MaskSpec mask_from(const Json& j) {
  check_keys(j, {"shape", "center", "radius", "inner_radius", "iz0", "ix0", "iz1", "ix1"},
             "metrics region mask");
  MaskSpec m;
  const auto shape = j.value("shape", std::string("disc"));
  if (shape == "disc") m.shape = MaskSpec::Shape::disc;
  else if (shape == "annulus") m.shape = MaskSpec::Shape::annulus;
  else if (shape == "rect") m.shape = MaskSpec::Shape::rect;
  else fail(ErrorKind::config, "unknown mask shape '" + shape + "'");
  if (j.contains("center")) m.center = point_from(j.at("center"));
  m.radius = j.value("radius", 0.0);
  m.inner_radius = j.value("inner_radius", 0.0);
  m.iz0 = j.value("iz0", 0);
  m.ix0 = j.value("ix0", 0);
  m.iz1 = j.value("iz1", 0);
  m.ix1 = j.value("ix1", 0);
  return m;
}

}  // namespace

Preset parse_preset(const std::string& name) {
  static const std::pair<const char*, Preset> table[] = {
      {"sr", Preset::sr}, {"er", Preset::er}, {"sc", Preset::sc},
      {"ec", Preset::ec}, {"cc", Preset::cc}, {"cl", Preset::cl}};
  for (const auto& [n, p] : table)
    if (name == n) return p;
  fail(ErrorKind::config, "unknown preset '" + name + "' (expected sr|er|sc|ec|cc|cl)");
}

std::string to_string(Preset p) {
  switch (p) {
    case Preset::sr: return "sr";
    case Preset::er: return "er";
    case Preset::sc: return "sc";
    case Preset::ec: return "ec";
    case Preset::cc: return "cc";
    case Preset::cl: return "cl";
  }
  return "?";
}

SolverConfig preset_config(Preset preset, SolveMode mode, SolverConfig base) {
  struct Row {
    double bf_mu, bf_beta;             // beamforming-only
    double dc_mu, dc_beta;             // deconvolution-only
    double gd, gb, joint_beta, joint_mu;  // joint
  };
  // Tuned hyperparameters per experiment class (rows: sr, er, sc, ec, cc, cl).
  static constexpr Row rows[] = {
      {5.0, 1e3, 3.0, 1e3, 1.0, 0.1, 500.0, 5.0},
      {0.05, 1e4, 0.05, 1e3, 2.0, 1.0, 1e3, 0.1},
      {0.5, 1e3, 0.1, 1e3, 1.0, 0.1, 1e3, 0.1},
      {0.05, 1e4, 0.1, 1e3, 1.0, 0.1, 1e3, 0.1},
      {0.5, 1e4, 0.01, 1e3, 0.5, 3.0, 5e3, 1.0},
      {0.5, 1e4, 0.01, 1e3, 0.5, 3.0, 5e3, 1.0},
  };
  const Row& r = rows[static_cast<int>(preset)];
  SolverConfig c = base;
  c.mode = mode;
  switch (mode) {
    case SolveMode::joint:
      c.gamma_d = r.gd;
      c.gamma_b = r.gb;
      c.beta = r.joint_beta;
      c.mu = r.joint_mu;
      break;
    case SolveMode::beamform_only:
      c.gamma_d = 0.0;
      c.gamma_b = 1.0;
      c.mu = r.bf_mu;
      c.beta = r.bf_beta;
      break;
    case SolveMode::deconv_only:
      c.gamma_d = 1.0;
      c.gamma_b = 0.0;
      c.mu = r.dc_mu;
      c.beta = r.dc_beta;
      break;
    case SolveMode::sequential:
      c.gamma_d = 0.0;
      c.gamma_b = 1.0;
      c.mu = r.bf_mu;
      c.beta = r.bf_beta;
      c.deconv_stage = {1.0, r.dc_mu, r.dc_beta};
      break;
  }
  return c;
}

PixelMask MaskSpec::build(const ImagingGrid& grid) const {
  switch (shape) {
    case Shape::disc: return disc_mask(grid, center, radius);
    case Shape::annulus: return annulus_mask(grid, center, inner_radius, radius);
    case Shape::rect: return rect_mask(grid, iz0, ix0, iz1, ix1);
  }
  return {};
}

void RunConfig::validate() const {
  probe.validate();
  grid.validate();
  apod.validate();
  require(!tx.empty(), ErrorKind::config, "at least one transmit angle is required");
  for (const auto& t : tx) t.validate();
  require(num_samples >= 1, ErrorKind::config, "num_samples must be positive");
  require(std::abs(grid.dz - probe.sound_speed / (2.0 * probe.sampling_freq)) <= 1e-15 &&
              grid.dx == probe.pitch,
          ErrorKind::config, "grid spacing must be c/(2 fs) axially and the pitch laterally");
  if (psf.source == PsfSpec::Source::file)
    require(std::filesystem::exists(psf.path), ErrorKind::not_found,
            "PSF file not found: " + psf.path.string());
  solver.validate();
}

Eigen::VectorXd transmit_pulse(const RunConfig& cfg) {
  if (!cfg.pulse_fbw) return {};
  return gaussian_pulse(cfg.probe.center_freq, cfg.probe.sampling_freq, *cfg.pulse_fbw);
}

Eigen::Index samples_to_cover(const ProbeGeometry& probe, const ImagingGrid& grid,
                              const std::vector<PlaneWaveTx>& tx) {
  double latest = 0.0;
  for (const auto& t : tx)
    for (int n : {0, probe.num_elements - 1})
      for (int iz : {0, grid.nz - 1})
        for (int ix : {0, grid.nx - 1})
          latest = std::max(latest, propagation_delay(Point2{grid.z(iz), grid.x(ix)},
                                                      probe.element_x(n), t,
                                                      probe.sound_speed));
  return std::max<Eigen::Index>(
      1, Eigen::Index(std::ceil((latest - probe.t0_offset) * probe.sampling_freq)) + 2);
}

RunConfig run_config_from_json(const Json& j, const std::filesystem::path& base_dir) {
  check_keys(j, {"description", "probe", "grid", "num_samples", "tx_angles", "apodization",
                 "phantom", "snr_db", "seed", "pulse", "psf", "solver", "metrics"},
             "run config");
  RunConfig c;
  try {
    if (j.contains("probe")) c.probe = probe_from_json(j.at("probe"));
    const auto& g = j.at("grid");
    check_keys(g, {"nz", "nx", "z_origin"}, "grid");
    c.grid = ImagingGrid::for_probe(c.probe, g.at("nz").get<int>(), g.at("nx").get<int>(),
                                    g.value("z_origin", 0.0));
    if (j.contains("tx_angles")) {
      c.tx.clear();
      for (const auto& a : j.at("tx_angles")) c.tx.push_back({a.get<double>()});
    }
    if (j.contains("apodization")) c.apod = apodization_from_json(j.at("apodization"));
    c.num_samples = j.value("num_samples", Eigen::Index(0));
    if (c.num_samples == 0) c.num_samples = samples_to_cover(c.probe, c.grid, c.tx);

    if (j.contains("phantom")) {
      const auto& p = j.at("phantom");
      check_keys(p, {"type", "points", "amplitude", "center", "radius", "seed"}, "phantom");
      const auto type = p.at("type").get<std::string>();
      if (type == "point") {
        c.phantom.type = PhantomSpec::Type::point;
        for (const auto& pt : p.at("points")) c.phantom.points.push_back(point_from(pt));
      } else if (type == "cyst") {
        c.phantom.type = PhantomSpec::Type::cyst;
        c.phantom.center = point_from(p.at("center"));
        c.phantom.radius = p.at("radius").get<double>();
        c.phantom.seed = p.value("seed", std::uint64_t(1));
      } else {
        fail(ErrorKind::config, "unknown phantom type '" + type + "'");
      }
      c.phantom.amplitude = p.value("amplitude", 1.0);
      require(std::isfinite(c.phantom.amplitude) && c.phantom.amplitude > 0.0,
              ErrorKind::config, "phantom amplitude must be positive");
    }
    if (j.contains("snr_db") && !j.at("snr_db").is_null()) c.snr_db = j.at("snr_db").get<double>();
    c.seed = j.value("seed", std::uint64_t(1));
    if (j.contains("pulse") && !j.at("pulse").is_null()) {
      const auto& p = j.at("pulse");
      check_keys(p, {"fbw"}, "pulse");
      c.pulse_fbw = p.at("fbw").get<double>();
    }

    if (j.contains("psf")) {
      const auto& p = j.at("psf");
      check_keys(p, {"source", "half_axial", "half_lateral", "axial_fbw", "lateral_sigma", "path",
                     "scaling"},
                 "psf");
      const auto src = p.value("source", std::string("system"));
      if (src == "system") c.psf.source = PsfSpec::Source::system;
      else if (src == "parametric") c.psf.source = PsfSpec::Source::parametric;
      else if (src == "file") c.psf.source = PsfSpec::Source::file;
      else fail(ErrorKind::config, "unknown psf source '" + src + "'");
      c.psf.half_axial = p.value("half_axial", c.psf.half_axial);
      c.psf.half_lateral = p.value("half_lateral", c.psf.half_lateral);
      if (p.contains("scaling")) {
        const auto sc = p.at("scaling").get<std::string>();
        if (sc == "match_model") c.psf.scaling = PsfSpec::Scaling::match_model;
        else if (sc == "unit_peak") c.psf.scaling = PsfSpec::Scaling::unit_peak;
        else if (sc == "none") c.psf.scaling = PsfSpec::Scaling::none;
        else fail(ErrorKind::config, "unknown psf scaling '" + sc + "'");
      }
      c.psf.axial_fbw = p.value("axial_fbw", c.psf.axial_fbw);
      c.psf.lateral_sigma = p.value("lateral_sigma", c.psf.lateral_sigma);
      if (p.contains("path")) {
        c.psf.path = p.at("path").get<std::string>();
        if (c.psf.path.is_relative()) c.psf.path = base_dir / c.psf.path;
      }
    }

    if (j.contains("solver")) {
      const auto& s = j.at("solver");
      check_keys(s, {"preset", "mode", "gamma_d", "gamma_b", "mu", "beta", "epsilon",
                     "max_iter", "inner", "deconv_stage"},
                 "solver");
      const auto mode = parse_solve_mode(s.value("mode", std::string("joint")));
      if (s.contains("preset")) {
        c.preset = parse_preset(s.at("preset").get<std::string>());
        c.solver = preset_config(*c.preset, mode, c.solver);
      }
      c.solver = solver_config_from_json(s, c.solver);
      c.solver.mode = mode;
    }

    if (j.contains("metrics")) {
      const auto& m = j.at("metrics");
      check_keys(m, {"kind", "regions", "dynamic_range", "nbins"}, "metrics");
      const auto kind = m.value("kind", std::string("point"));
      if (kind == "point") c.metrics.kind = MetricsSpec::Kind::point;
      else if (kind == "cyst") c.metrics.kind = MetricsSpec::Kind::cyst;
      else fail(ErrorKind::config, "unknown metrics kind '" + kind + "'");
      c.metrics.dynamic_range = m.value("dynamic_range", 60.0);
      c.metrics.nbins = m.value("nbins", 256);
      if (m.contains("regions"))
        for (const auto& r : m.at("regions")) {
          check_keys(r, {"roi", "background", "disjoint"}, "metrics region");
          c.metrics.regions.push_back(
              {mask_from(r.at("roi")), mask_from(r.at("background")), r.value("disjoint", true)});
        }
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::config, std::string("run config: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::not_found, "config not found: " + path.string());
  Json j;
  try {
    j = Json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::config, path.string() + ": " + e.what());
  }
  return run_config_from_json(j, path.parent_path());
}

std::vector<RegionSpec> metric_regions(const RunConfig& cfg,
                                       const std::vector<CystRegion>& cysts) {
  std::vector<RegionSpec> out;
  for (const auto& r : cfg.metrics.regions) {
    RegionSpec spec{r.roi.build(cfg.grid), r.background.build(cfg.grid), r.disjoint};
    spec.validate();
    out.push_back(std::move(spec));
  }
  if (out.empty())
    for (const auto& c : cysts) out.push_back(cyst_regions(cfg.grid, c));
  return out;
}

}  // namespace usjoint
