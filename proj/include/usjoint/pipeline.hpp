#pragma once

#include <vector>

#include "usjoint/config.hpp"
#include "usjoint/das.hpp"
#include "usjoint/forward_model.hpp"
#include "usjoint/phantom.hpp"
#include "usjoint/psf.hpp"
#include "usjoint/solver.hpp"

namespace usjoint {

/// Everything a synthetic run needs: one system matrix, channel record and
/// DAS image per transmit, the phantom and the solver PSF.
struct Experiment {
  RunConfig config;
  Phantom phantom;
  std::vector<SparseSystemMatrix> models;
  std::vector<ChannelData> channels;
  std::vector<RfImage> das;
  Psf psf;               // as used by the solver
  double psf_gain = 1.0;  // factor divided out of the kernel; y_DAS is divided by it too
};

Phantom make_phantom(const RunConfig& cfg);

/// PSF per the config: DAS response of the model at the grid center,
/// parametric, or loaded from a container file.
Psf make_psf(const RunConfig& cfg, const SparseSystemMatrix& model);

/// Factor the solver PSF is divided by under `scaling` (1 for none).
double psf_scale_factor(const Psf& psf, const SparseSystemMatrix& model,
                        PsfSpec::Scaling scaling);

/// Sets exp.psf from `raw` and records the gain removed from it.
void set_solver_psf(Experiment& exp, const Psf& raw);

Experiment prepare_experiment(const RunConfig& cfg);

/// Solves on transmit `tx_index` of the experiment.
SolveReport reconstruct(const Experiment& exp, const SolverConfig& cfg,
                        std::size_t tx_index = 0,
                        const SolverState* initial = nullptr);

}  // namespace usjoint
