// C^2 cutoff pair for the image construction: omega0 == 1 up to 2/3, == 0
// from 5/6 on, quintic smoothstep across the transition; omega1 mirrors it.
#pragma once

#include <cmath>

#include "cdgreen/errors.hpp"

namespace cdgreen {

struct CutoffJet {
  double w = 0.0;
  double dw = 0.0;
  double d2w = 0.0;

  bool identically_zero() const { return w == 0.0 && dw == 0.0 && d2w == 0.0; }
};

inline constexpr double kCutLo = 2.0 / 3.0;
inline constexpr double kCutHi = 5.0 / 6.0;

inline CutoffJet omega0(double t) {
  if (t < -1e-12 || t > 1.0 + 1e-12) throw DomainError("cutoff argument outside [0,1]");
  CutoffJet c;
  if (t <= kCutLo) {
    c.w = 1.0;
    return c;
  }
  if (t >= kCutHi) return c;  // zero jet
  const double scale = 1.0 / (kCutHi - kCutLo);  // == 6
  const double u = (t - kCutLo) * scale;
  const double u2 = u * u;
  const double s = u2 * u * (10.0 + u * (-15.0 + 6.0 * u));
  const double ds = 30.0 * u2 * (u - 1.0) * (u - 1.0);
  const double d2s = 60.0 * u * (2.0 * u - 1.0) * (u - 1.0);
  c.w = 1.0 - s;
  c.dw = -ds * scale;
  c.d2w = -d2s * scale * scale;
  return c;
}

// omega1(t) = omega0(1-t): equals 1 from 1/3 on, 0 below 1/6.
inline CutoffJet omega1(double t) {
  CutoffJet c = omega0(1.0 - t);
  c.dw = -c.dw;
  return c;
}

}  // namespace cdgreen
