// Frozen-coefficient fundamental solution of -eps*Lap + 2q d1 in scaled
// coordinates, with the closed-form derivative jet and the exponential
// boundary weights used by the image construction.
#pragma once

#include <cmath>
#include <string>

#include "cdgreen/errors.hpp"
#include "cdgreen/vec.hpp"

namespace cdgreen {

inline constexpr double kFourPi = 4.0 * M_PI;
// exp() underflows to 0 below roughly -745 and overflows above roughly 709;
// the weight clamp stays a margin inside that.
inline constexpr double kExpUnderflow = -745.0;
inline constexpr double kExpSaturate = 700.0;
inline constexpr double kCoincidentTol = 1e-12;

// Source-centered coordinates scaled by eps. The axial coordinate may use a
// shifted abscissa d (image sources); transverse coordinates always use x.
struct HatCoords {
  double xi1 = 0.0, xi2 = 0.0, xi3 = 0.0;
  double r = 0.0;
  double shift = 0.0;
};

inline HatCoords hat_coords(const Vec3& x, const Vec3& xi, double eps, double shift) {
  HatCoords h;
  h.shift = shift;
  h.xi1 = (xi.x - shift) / eps;
  h.xi2 = (xi.y - x.y) / eps;
  h.xi3 = (xi.z - x.z) / eps;
  h.r = std::sqrt(h.xi1 * h.xi1 + h.xi2 * h.xi2 + h.xi3 * h.xi3);
  return h;
}

inline HatCoords hat_coords(const Vec3& x, const Vec3& xi, double eps) {
  return hat_coords(x, xi, eps, x.x);
}

// Value, first derivatives (target coordinates and the drift parameter q),
// and the second derivatives the slab assembly consumes.
struct FundamentalJet {
  double value = 0.0;
  double d_xi1 = 0.0, d_xi2 = 0.0, d_xi3 = 0.0;
  double d_q = 0.0;
  double d2_xi1xi1 = 0.0, d2_xi2xi2 = 0.0, d2_xi3xi3 = 0.0;
  double d2_xi1xi2 = 0.0, d2_xi1xi3 = 0.0;
  double d2_xi1q = 0.0;
};

// Weighted kernel value: W * g with W = exp(log_weight). The weight exponent
// and the kernel exponent q*(xi1 - r) are fused before the single exp() call,
// so exponentially large W against exponentially small g never overflows.
inline double weighted_value(const HatCoords& h, double q, double eps, double log_weight,
                             bool* saturated = nullptr) {
  if (h.r < kCoincidentTol)
    throw SingularityError("kernel evaluated at the source point (r_hat < 1e-12)");
  double e = log_weight + q * (h.xi1 - h.r);
  if (e < kExpUnderflow) return 0.0;
  if (e > kExpSaturate) {
    if (saturated) *saturated = true;
    e = kExpSaturate;
  }
  return std::exp(e) / (kFourPi * eps * eps * h.r);
}

inline double eval_g(const HatCoords& h, double q, double eps) {
  return weighted_value(h, q, eps, 0.0);
}

// Full weighted jet. All components share one exponential; the rational
// prefactors follow the closed forms (each checked against central
// differences in the test suite). d_q differentiates only the kernel, not
// the weight; assemblies add (d log W/dq) * value themselves.
inline FundamentalJet weighted_jet(const HatCoords& h, double q, double eps, double log_weight,
                                   bool* saturated = nullptr) {
  if (h.r < kCoincidentTol)
    throw SingularityError("kernel evaluated at the source point (r_hat < 1e-12)");
  FundamentalJet j;
  double e = log_weight + q * (h.xi1 - h.r);
  if (e < kExpUnderflow) return j;
  if (e > kExpSaturate) {
    if (saturated) *saturated = true;
    e = kExpSaturate;
  }
  const double E = std::exp(e);
  const double r = h.r, x1 = h.xi1, x2 = h.xi2, x3 = h.xi3;
  const double inv_r = 1.0 / r;
  const double inv_r2 = inv_r * inv_r;
  const double inv_r3 = inv_r2 * inv_r;
  const double e2 = eps * eps;
  const double c0 = E / (kFourPi * e2);            // 1/(4 pi eps^2) scale
  const double c1 = c0 / eps;                      // 1/(4 pi eps^3)
  const double c2 = c1 / eps;                      // 1/(4 pi eps^4)
  const double qr1 = q * r + 1.0;

  j.value = c0 * inv_r;
  j.d_xi1 = c1 * inv_r2 * (q * (r - x1) - x1 * inv_r);
  j.d_xi2 = -c1 * qr1 * x2 * inv_r3;
  j.d_xi3 = -c1 * qr1 * x3 * inv_r3;
  j.d_q = c0 * (x1 - r) * inv_r;

  const double rmx = r - x1;
  j.d2_xi1xi1 =
      c2 * inv_r3 * (q * q * rmx * rmx - q * rmx * (1.0 + 3.0 * x1 * inv_r) +
                     (3.0 * x1 * x1 - r * r) * inv_r2);
  j.d2_xi2xi2 = c2 * inv_r3 * (q * q * x2 * x2 + qr1 * (3.0 * x2 * x2 - r * r) * inv_r2);
  j.d2_xi3xi3 = c2 * inv_r3 * (q * q * x3 * x3 + qr1 * (3.0 * x3 * x3 - r * r) * inv_r2);
  const double mixed = q * q * (x1 - r) + q * (3.0 * x1 - r) * inv_r + 3.0 * x1 * inv_r2;
  j.d2_xi1xi2 = c2 * x2 * inv_r3 * mixed;
  j.d2_xi1xi3 = c2 * x3 * inv_r3 * mixed;
  j.d2_xi1q = c1 * inv_r2 * (-q * rmx * rmx + (r * r - x1 * x1) * inv_r);
  return j;
}

inline FundamentalJet eval_jet(const HatCoords& h, double q, double eps) {
  return weighted_jet(h, q, eps, 0.0);
}

// Residual of the frozen adjoint operator applied to the kernel:
// -eps*(Lap g) + 2q d1 g, which vanishes identically away from the source.
// scale is the sum of term magnitudes, the natural yardstick for the
// floating-point cancellation left in residual.
struct FrozenResidual {
  double residual = 0.0;
  double scale = 0.0;
};

inline FrozenResidual frozen_residual(const Vec3& x, const Vec3& xi, double q, double eps) {
  const FundamentalJet j = eval_jet(hat_coords(x, xi, eps), q, eps);
  FrozenResidual fr;
  const double lap = j.d2_xi1xi1 + j.d2_xi2xi2 + j.d2_xi3xi3;
  fr.residual = -eps * lap + 2.0 * q * j.d_xi1;
  fr.scale = eps * (std::abs(j.d2_xi1xi1) + std::abs(j.d2_xi2xi2) + std::abs(j.d2_xi3xi3)) +
             std::abs(2.0 * q * j.d_xi1);
  return fr;
}

// Boundary weights of the image construction. All four are plain
// exponentials of 2q/eps-scaled affine expressions in x1; exponents beyond
// +-700 are clamped with a saturation flag (downstream code works with the
// fused log-space products instead, which stay bounded on the closed domain).
struct Weights {
  double lambda = 0.0;        // exp(2q(x1-1)/eps)
  double lambda_plus = 0.0;   // exp(2q(1+x1)/eps)
  double lambda_minus = 0.0;  // exp(2q(1-x1)/eps)
  double p = 0.0;             // exp(-2q x1/eps)
  double q = 0.0;
  bool saturated = false;
};

inline Weights eval_weights(double x1, double q, double eps) {
  Weights w;
  w.q = q;
  auto safe_exp = [&w](double e) {
    if (e > kExpSaturate) {
      w.saturated = true;
      e = kExpSaturate;
    } else if (e < -kExpSaturate) {
      w.saturated = true;
      e = -kExpSaturate;
    }
    return std::exp(e);
  };
  const double s = 2.0 * q / eps;
  w.lambda = safe_exp(s * (x1 - 1.0));
  w.lambda_plus = safe_exp(s * (1.0 + x1));
  w.lambda_minus = safe_exp(s * (1.0 - x1));
  w.p = safe_exp(-s * x1);
  return w;
}

}  // namespace cdgreen
