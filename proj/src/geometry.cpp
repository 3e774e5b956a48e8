#include "usjoint/geometry.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "usjoint/error.hpp"

namespace usjoint {

void ProbeGeometry::validate() const {
  require(num_elements >= 2, ErrorKind::invalid_argument,
          "probe needs at least 2 elements");
  require(pitch > 0.0, ErrorKind::invalid_argument, "probe pitch must be > 0");
  require(sound_speed > 0.0, ErrorKind::invalid_argument,
          "sound speed must be > 0");
  require(center_freq > 0.0 && sampling_freq > 2.0 * center_freq,
          ErrorKind::invalid_argument,
          "sampling frequency must exceed twice the center frequency");
}

void PlaneWaveTx::validate() const {
  require(std::isfinite(angle) && std::abs(angle) < std::numbers::pi / 2,
          ErrorKind::invalid_argument, "steering angle must satisfy |angle| < pi/2");
}

ImagingGrid ImagingGrid::for_probe(const ProbeGeometry& probe, int nz, int nx,
                                   double z_origin) {
  probe.validate();
  ImagingGrid g;
  g.nz = nz;
  g.nx = nx;
  g.dz = probe.sound_speed / (2.0 * probe.sampling_freq);
  g.dx = probe.pitch;
  g.z_origin = z_origin;
  g.validate();
  return g;
}

bool ImagingGrid::contains(const Point2& p) const {
  int iz = 0, ix = 0;
  return nearest(p, iz, ix);
}

bool ImagingGrid::nearest(const Point2& p, int& iz, int& ix) const {
  const double fz = (p.z - z_origin) / dz;
  const double fx = p.x / dx + 0.5 * (nx - 1);
  if (!std::isfinite(fz) || !std::isfinite(fx)) return false;
  const long rz = std::lround(fz);
  const long rx = std::lround(fx);
  if (rz < 0 || rz >= nz || rx < 0 || rx >= nx) return false;
  iz = int(rz);
  ix = int(rx);
  return true;
}

void ImagingGrid::validate() const {
  require(nz >= 1 && nx >= 1, ErrorKind::invalid_argument,
          "imaging grid must be nonempty");
  require(dz > 0.0 && dx > 0.0, ErrorKind::invalid_argument,
          "grid spacing must be positive");
  require(z_origin >= 0.0, ErrorKind::invalid_argument,
          "grid must start at nonnegative depth");
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace usjoint
