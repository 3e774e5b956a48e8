#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "usjoint/geometry.hpp"

namespace usjoint {

enum class WindowKind { rectangular, hanning, tukey };

struct ApodizationSpec {
  WindowKind window = WindowKind::hanning;
  double f_number = 0.5;
  double tukey_taper = 0.25;  // only read for WindowKind::tukey

  static ApodizationSpec rectangular(double f_number) {
    return {WindowKind::rectangular, f_number, 0.0};
  }
  static ApodizationSpec hanning(double f_number) {
    return {WindowKind::hanning, f_number, 0.0};
  }
  static ApodizationSpec tukey(double taper, double f_number) {
    return {WindowKind::tukey, f_number, taper};
  }

  void validate() const;
  std::string describe() const;
};

/// Window value at normalized offset s in [-1, 1]; peak 1 at s = 0, zero
/// outside.
template <typename Scalar>
Scalar window_value(WindowKind kind, Scalar s, Scalar taper = Scalar(0)) {
  using std::abs;
  using std::cos;
  const Scalar a = abs(s);
  if (a > Scalar(1)) return Scalar(0);
  const Scalar pi = std::numbers::pi_v<Scalar>;
  switch (kind) {
    case WindowKind::rectangular:
      return Scalar(1);
    case WindowKind::hanning: {
      const Scalar c = cos(pi * a / Scalar(2));
      return c * c;
    }
    case WindowKind::tukey: {
      if (taper <= Scalar(0)) return Scalar(1);
      const Scalar flat = Scalar(1) - taper;
      if (a <= flat) return Scalar(1);
      return Scalar(0.5) * (Scalar(1) + cos(pi * (a - flat) / taper));
    }
  }
  return Scalar(0);
}

/// Receive weight of an element for a pixel. The half-aperture grows as
/// z / (2 f#) and is never narrower than min_half_aperture; z <= 0 gives 0.
double apodization_weight(const Point2& pixel, double element_x,
                          const ApodizationSpec& spec,
                          double min_half_aperture = 0.0);

}  // namespace usjoint
