#include <cmath>

#include "usjoint/error.hpp"
#include "usjoint/json_io.hpp"

namespace usjoint {

namespace {

std::string method_name(InnerMethod m) {
  return m == InnerMethod::lbfgs ? "lbfgs" : "conjugate_residual";
}

// JSON has no infinities; they are written as strings.
Json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

}  // namespace

Json to_json(const ProbeGeometry& p) {
  return {{"num_elements", p.num_elements}, {"pitch", p.pitch},
          {"sound_speed", p.sound_speed},   {"sampling_freq", p.sampling_freq},
          {"center_freq", p.center_freq},   {"t0_offset", p.t0_offset}};
}

Json to_json(const ImagingGrid& g) {
  return {{"nz", g.nz}, {"nx", g.nx}, {"dz", g.dz}, {"dx", g.dx}, {"z_origin", g.z_origin}};
}

Json to_json(const PlaneWaveTx& tx) { return {{"angle", tx.angle}}; }

Json to_json(const ApodizationSpec& a) {
  Json j;
  switch (a.window) {
    case WindowKind::rectangular: j["window"] = "rectangular"; break;
    case WindowKind::hanning: j["window"] = "hanning"; break;
    case WindowKind::tukey:
      j["window"] = "tukey";
      j["taper"] = a.tukey_taper;
      break;
  }
  j["f_number"] = a.f_number;
  return j;
}

Json to_json(const SolverConfig& c) {
  return {{"mode", to_string(c.mode)},
          {"gamma_d", c.gamma_d},
          {"gamma_b", c.gamma_b},
          {"mu", c.mu},
          {"beta", c.beta},
          {"epsilon", c.epsilon},
          {"max_iter", c.max_iter},
          {"inner",
           {{"method", method_name(c.inner.method)},
            {"max_iter", c.inner.max_iter},
            {"tol", c.inner.tol},
            {"lbfgs_memory", c.inner.lbfgs_memory}}},
          {"deconv_stage",
           {{"gamma_d", c.deconv_stage.gamma},
            {"mu", c.deconv_stage.mu},
            {"beta", c.deconv_stage.beta}}}};
}

Json to_json(const MetricsReport& r) {
  Json targets = Json::array();
  for (const auto& t : r.targets)
    targets.push_back({{"iz", t.iz},
                       {"ix", t.ix},
                       {"fwhm_axial_mm", number(t.fwhm_axial_mm)},
                       {"fwhm_lateral_mm", number(t.fwhm_lateral_mm)}});
  Json regions = Json::array();
  for (const auto& g : r.regions)
    regions.push_back({{"cnr_db", number(g.cnr_db)}, {"gcnr", number(g.gcnr)}});
  return {{"label", r.label},
          {"targets", targets},
          {"regions", regions},
          {"mean_fwhm_axial_mm", number(r.mean_fwhm_axial_mm)},
          {"mean_fwhm_lateral_mm", number(r.mean_fwhm_lateral_mm)},
          {"mean_cnr_db", number(r.mean_cnr_db)},
          {"mean_gcnr", number(r.mean_gcnr)}};
}

Json to_json(const SolveReport& r, bool include_timing) {
  Json stages = Json::array();
  for (const auto& s : r.stages)
    stages.push_back({{"iterations", s.iter},
                      {"objective_history", s.objective_history},
                      {"residual_uz", s.residual_uz},
                      {"residual_uw", s.residual_uw},
                      {"inner_iterations", s.inner_iterations}});
  Json j = {{"config", to_json(r.config)},
            {"converged", r.converged},
            {"iterations", r.iterations},
            {"stages", stages}};
  if (include_timing) j["wall_time_s"] = r.wall_time;
  return j;
}

ProbeGeometry probe_from_json(const Json& j) {
  ProbeGeometry p;
  p.num_elements = j.value("num_elements", p.num_elements);
  p.pitch = j.value("pitch", p.pitch);
  p.sound_speed = j.value("sound_speed", p.sound_speed);
  p.sampling_freq = j.value("sampling_freq", p.sampling_freq);
  p.center_freq = j.value("center_freq", p.center_freq);
  p.t0_offset = j.value("t0_offset", p.t0_offset);
  p.validate();
  return p;
}

ImagingGrid grid_from_json(const Json& j) {
  ImagingGrid g;
  g.nz = j.at("nz").get<int>();
  g.nx = j.at("nx").get<int>();
  g.dz = j.at("dz").get<double>();
  g.dx = j.at("dx").get<double>();
  g.z_origin = j.value("z_origin", 0.0);
  g.validate();
  return g;
}

PlaneWaveTx tx_from_json(const Json& j) {
  PlaneWaveTx tx{j.value("angle", 0.0)};
  tx.validate();
  return tx;
}

ApodizationSpec apodization_from_json(const Json& j) {
  ApodizationSpec a;
  const auto window = j.value("window", std::string("hanning"));
  if (window == "rectangular") a.window = WindowKind::rectangular;
  else if (window == "hanning" || window == "hann") a.window = WindowKind::hanning;
  else if (window == "tukey") a.window = WindowKind::tukey;
  else fail(ErrorKind::config, "unknown apodization window '" + window + "'");
  a.f_number = j.value("f_number", a.f_number);
  a.tukey_taper = j.value("taper", a.window == WindowKind::tukey ? 0.25 : 0.0);
  a.validate();
  return a;
}

SolverConfig solver_config_from_json(const Json& j, SolverConfig c) {
  if (j.contains("mode")) c.mode = parse_solve_mode(j.at("mode").get<std::string>());
  c.gamma_d = j.value("gamma_d", c.gamma_d);
  c.gamma_b = j.value("gamma_b", c.gamma_b);
  c.mu = j.value("mu", c.mu);
  c.beta = j.value("beta", c.beta);
  c.epsilon = j.value("epsilon", c.epsilon);
  c.max_iter = j.value("max_iter", c.max_iter);
  if (j.contains("inner")) {
    const auto& in = j.at("inner");
    const auto method = in.value("method", method_name(c.inner.method));
    if (method == "lbfgs") c.inner.method = InnerMethod::lbfgs;
    else if (method == "conjugate_residual" || method == "cr")
      c.inner.method = InnerMethod::conjugate_residual;
    else fail(ErrorKind::config, "unknown inner solver '" + method + "'");
    c.inner.max_iter = in.value("max_iter", c.inner.max_iter);
    c.inner.tol = in.value("tol", c.inner.tol);
    c.inner.lbfgs_memory = in.value("lbfgs_memory", c.inner.lbfgs_memory);
  }
  if (j.contains("deconv_stage")) {
    const auto& d = j.at("deconv_stage");
    c.deconv_stage.gamma = d.value("gamma_d", c.deconv_stage.gamma);
    c.deconv_stage.mu = d.value("mu", c.deconv_stage.mu);
    c.deconv_stage.beta = d.value("beta", c.deconv_stage.beta);
  }
  return c;
}

}  // namespace usjoint
