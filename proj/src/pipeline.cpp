#include "usjoint/pipeline.hpp"

#include "usjoint/container.hpp"
#include "usjoint/error.hpp"

namespace usjoint {

Phantom make_phantom(const RunConfig& cfg) {
  switch (cfg.phantom.type) {
    case PhantomSpec::Type::point:
      return make_point_phantom(cfg.grid, cfg.phantom.points, cfg.phantom.amplitude);
    case PhantomSpec::Type::cyst: {
      Phantom ph = make_cyst_phantom(cfg.grid, cfg.phantom.center, cfg.phantom.radius,
                                     cfg.phantom.seed);
      ph.trf *= cfg.phantom.amplitude;
      return ph;
    }
    case PhantomSpec::Type::none:
      break;
  }
  fail(ErrorKind::config, "run config does not describe a phantom");
}

Psf make_psf(const RunConfig& cfg, const SparseSystemMatrix& model) {
  switch (cfg.psf.source) {
    case PsfSpec::Source::system:
      return make_system_psf(model, cfg.probe, cfg.tx.front(), cfg.apod, cfg.grid.nz / 2,
                             cfg.grid.nx / 2, cfg.psf.half_axial, cfg.psf.half_lateral,
                             transmit_pulse(cfg));
    case PsfSpec::Source::parametric:
      return make_parametric_psf(cfg.probe.center_freq, cfg.probe.sampling_freq,
                                 cfg.psf.axial_fbw, cfg.psf.lateral_sigma, cfg.grid.dz,
                                 cfg.grid.dx);
    case PsfSpec::Source::file:
      return psf_from(read_container(cfg.psf.path));
  }
  fail(ErrorKind::config, "unknown PSF source");
}

double psf_scale_factor(const Psf& psf, const SparseSystemMatrix& model,
                        PsfSpec::Scaling scaling) {
  switch (scaling) {
    case PsfSpec::Scaling::match_model: {
      const ConvOperator op(psf, model.grid.nz, model.grid.nx);
      const double h = op.transfer().cwiseAbs().maxCoeff();
      const double phi = spectral_norm(model);
      return h > 0.0 && phi > 0.0 ? h / phi : 1.0;
    }
    case PsfSpec::Scaling::unit_peak: {
      const double peak = psf.kernel.cwiseAbs().maxCoeff();
      return peak > 0.0 ? peak : 1.0;
    }
    case PsfSpec::Scaling::none:
      break;
  }
  return 1.0;
}

void set_solver_psf(Experiment& exp, const Psf& raw) {
  require(!exp.models.empty(), ErrorKind::invalid_argument, "experiment has no system matrix");
  exp.psf_gain = psf_scale_factor(raw, exp.models.front(), exp.config.psf.scaling);
  exp.psf = raw;
  exp.psf.kernel /= exp.psf_gain;
}

Experiment prepare_experiment(const RunConfig& cfg) {
  cfg.validate();
  Experiment exp;
  exp.config = cfg;
  exp.phantom = make_phantom(cfg);
  for (std::size_t k = 0; k < cfg.tx.size(); ++k) {
    exp.models.push_back(
        cached_system_matrix(cfg.probe, cfg.grid, cfg.tx[k], cfg.num_samples, cfg.apod));
    exp.channels.push_back(simulate_channel_data(exp.phantom, exp.models.back(), cfg.probe,
                                                 cfg.tx[k], cfg.snr_db, cfg.seed + k,
                                                 transmit_pulse(cfg)));
    exp.das.push_back(das_beamform(exp.channels.back(), cfg.grid, cfg.apod));
  }
  set_solver_psf(exp, make_psf(cfg, exp.models.front()));
  return exp;
}

SolveReport reconstruct(const Experiment& exp, const SolverConfig& cfg,
                        std::size_t tx_index, const SolverState* initial) {
  require(tx_index < exp.models.size(), ErrorKind::invalid_argument,
          "transmit index out of range");
  const auto& ch = exp.channels[tx_index].samples;
  Problem p;
  p.model = &exp.models[tx_index];
  p.y_ch = Eigen::Map<const Eigen::VectorXd>(ch.data(), ch.size());
  p.psf = &exp.psf;
  p.y_das = exp.das[tx_index];
  p.y_das.data /= exp.psf_gain;
  return solve(cfg, p, initial);
}

}  // namespace usjoint
