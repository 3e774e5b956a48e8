#include "usjoint/apodization.hpp"

#include <algorithm>
#include <sstream>

#include "usjoint/error.hpp"

namespace usjoint {

void ApodizationSpec::validate() const {
  require(f_number > 0.0 && std::isfinite(f_number), ErrorKind::invalid_argument,
          "f-number must be positive");
  if (window == WindowKind::tukey)
    require(tukey_taper >= 0.0 && tukey_taper <= 1.0,
            ErrorKind::invalid_argument, "tukey taper must lie in [0, 1]");
}

std::string ApodizationSpec::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (window) {
    case WindowKind::rectangular: os << "rectangular"; break;
    case WindowKind::hanning: os << "hanning"; break;
    case WindowKind::tukey: os << "tukey(" << tukey_taper << ")"; break;
  }
  os << ",f#=" << f_number;
  return os.str();
}

double apodization_weight(const Point2& pixel, double element_x,
                          const ApodizationSpec& spec,
                          double min_half_aperture) {
  if (!(pixel.z > 0.0)) return 0.0;
  const double half = std::max(pixel.z / (2.0 * spec.f_number), min_half_aperture);
  const double s = (pixel.x - element_x) / half;
  return window_value(spec.window, s, spec.tukey_taper);
}

}  // namespace usjoint
