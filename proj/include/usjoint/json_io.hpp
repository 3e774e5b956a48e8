#pragma once

#include <json.hpp>

#include "usjoint/apodization.hpp"
#include "usjoint/geometry.hpp"
#include "usjoint/metrics.hpp"
#include "usjoint/solver.hpp"

namespace usjoint {

using Json = nlohmann::ordered_json;

Json to_json(const ProbeGeometry& p);
Json to_json(const ImagingGrid& g);
Json to_json(const PlaneWaveTx& tx);
Json to_json(const ApodizationSpec& a);
Json to_json(const SolverConfig& c);
Json to_json(const MetricsReport& r);
/// Config echo, iteration count, objective and residual histories, timing.
/// Timing is omitted when include_timing is false (regression comparisons).
Json to_json(const SolveReport& r, bool include_timing = true);

ProbeGeometry probe_from_json(const Json& j);
ImagingGrid grid_from_json(const Json& j);
PlaneWaveTx tx_from_json(const Json& j);
ApodizationSpec apodization_from_json(const Json& j);
/// Reads hyperparameters on top of `base`; missing keys keep base values.
SolverConfig solver_config_from_json(const Json& j, SolverConfig base = {});

}  // namespace usjoint
