// Explicit approximations to the Green's function built from the frozen
// kernel by the method of images: slab variants vanish on x1 (or xi1) = 0,1;
// cube variants add cutoff-weighted transverse reflections. "Bar" freezes the
// drift at the observation point (q = a(x)/2), "tilde" at the source
// (q = a(xi)/2).
#pragma once

#include <cmath>

#include "cdgreen/cutoff.hpp"
#include "cdgreen/errors.hpp"
#include "cdgreen/fundamental.hpp"
#include "cdgreen/problem.hpp"

namespace cdgreen {

enum class ParametrixKind { BarSlab, TildeSlab, BarCube, TildeCube };

inline const char* to_string(ParametrixKind k) {
  switch (k) {
    case ParametrixKind::BarSlab: return "bar_slab";
    case ParametrixKind::TildeSlab: return "tilde_slab";
    case ParametrixKind::BarCube: return "bar_cube";
    default: return "tilde_cube";
  }
}

// Which components of the jet a caller wants. Unused components are skipped
// where that saves kernel evaluations (number crunching is dominated by the
// per-image exp calls, which value-only requests halve).
struct DerivMask {
  bool value = true;
  bool d_xi1 = false, d_xi2 = false, d_xi3 = false;
  bool d_x1 = false, d_x2 = false, d_x3 = false;
  bool d2_xi1xi1 = false, d2_xi2xi2 = false, d2_xi3xi3 = false;
  bool d2_xi1xi2 = false, d2_xi1xi3 = false;

  static DerivMask value_only() { return {}; }
  static DerivMask first_xi() {
    DerivMask m;
    m.d_xi1 = m.d_xi2 = m.d_xi3 = true;
    return m;
  }
  static DerivMask everything() {
    DerivMask m;
    m.d_xi1 = m.d_xi2 = m.d_xi3 = m.d_x1 = m.d_x2 = m.d_x3 = true;
    m.d2_xi1xi1 = m.d2_xi2xi2 = m.d2_xi3xi3 = m.d2_xi1xi2 = m.d2_xi1xi3 = true;
    return m;
  }
  bool any_dxi() const { return d_xi1 || d_xi2 || d_xi3; }
  bool any_dx() const { return d_x1 || d_x2 || d_x3; }
  bool any_d2() const { return d2_xi1xi1 || d2_xi2xi2 || d2_xi3xi3 || d2_xi1xi2 || d2_xi1xi3; }
  bool any_deriv() const { return any_dxi() || any_dx() || any_d2(); }
};

struct ParametrixEval {
  double value = 0.0;
  Vec3 d_xi;  // partials in xi1, xi2, xi3
  Vec3 d_x;   // partials in x1, x2, x3
  double d2_xi1xi1 = 0.0, d2_xi2xi2 = 0.0, d2_xi3xi3 = 0.0;
  double d2_xi1xi2 = 0.0, d2_xi1xi3 = 0.0;
  bool saturated = false;
};

namespace detail {

// The four image abscissas of the slab construction and their fused
// log-space weights W_i = exp(q (d_i - x1)/eps):
//   d = x1      W = 1
//   d = -x1     W = p
//   d = 2 - x1  W = lambda_minus
//   d = 2 + x1  W = p * lambda_plus
struct SlabTerms {
  HatCoords h[4];
  FundamentalJet J[4];
  double dlogw_dq[4];   // (d_i - x1)/eps
  double dlogw_dx1[4];  // q (d_i' - 1)/eps at fixed q
  double dprime[4];     // d d_i / d x1
  bool saturated = false;
};

inline SlabTerms build_slab_terms(const Vec3& x, const Vec3& xi, double q, double eps,
                                  bool need_jet) {
  SlabTerms t;
  const double d[4] = {x.x, -x.x, 2.0 - x.x, 2.0 + x.x};
  const double dp[4] = {1.0, -1.0, -1.0, 1.0};
  for (int i = 0; i < 4; ++i) {
    t.h[i] = hat_coords(x, xi, eps, d[i]);
    t.dlogw_dq[i] = (d[i] - x.x) / eps;
    t.dprime[i] = dp[i];
    t.dlogw_dx1[i] = q * (dp[i] - 1.0) / eps;
    const double logw = q * t.dlogw_dq[i];
    if (need_jet)
      t.J[i] = weighted_jet(t.h[i], q, eps, logw, &t.saturated);
    else
      t.J[i].value = weighted_value(t.h[i], q, eps, logw, &t.saturated);
  }
  return t;
}

// q-derivative of the weighted term W_i * g_i, including the weight's own
// q-dependence.
inline double term_dq(const SlabTerms& t, int i) {
  return t.dlogw_dq[i] * t.J[i].value + t.J[i].d_q;
}

// x1-derivative of the weighted term at fixed q: the abscissa moves with x1
// and the weight carries an explicit x1 factor.
inline double term_dx1(const SlabTerms& t, int i) {
  return t.dlogw_dx1[i] * t.J[i].value - t.dprime[i] * t.J[i].d_xi1;
}

inline void check_unit_interval(double v, const char* what) {
  if (v < -1e-12 || v > 1.0 + 1e-12) throw DomainError(std::string(what) + " outside [0,1]");
}

}  // namespace detail

// Slab parametrix frozen at the observation point:
//   [g_(x1) - p g_(-x1)] - omega1(xi1) [lm g_(2-x1) - p lp g_(2+x1)],
// which vanishes at xi1 = 0 and xi1 = 1. q-chain terms appear only in the
// x-derivatives (q = a(x)/2 moves with x).
inline ParametrixEval eval_bar_slab(const Vec3& x, const Vec3& xi, const ProblemSpec& spec,
                                    const DerivMask& mask = DerivMask::value_only()) {
  detail::check_unit_interval(x.x, "bar slab: x1");
  detail::check_unit_interval(xi.x, "bar slab: xi1");
  const double q = 0.5 * spec.a.value(x);
  const double eps = spec.eps;
  const CutoffJet w = omega1(xi.x);

  detail::SlabTerms t = detail::build_slab_terms(x, xi, q, eps, mask.any_deriv());
  const FundamentalJet &J0 = t.J[0], &J1 = t.J[1], &J2 = t.J[2], &J3 = t.J[3];

  ParametrixEval r;
  r.saturated = t.saturated;
  const double g2v = J2.value - J3.value;  // cutoff-carried image pair
  r.value = (J0.value - J1.value) - w.w * g2v;

  if (!mask.any_deriv()) return r;

  const double g2d1 = J2.d_xi1 - J3.d_xi1;
  if (mask.d_xi1) r.d_xi[0] = (J0.d_xi1 - J1.d_xi1) - w.w * g2d1 - w.dw * g2v;
  if (mask.d_xi2) r.d_xi[1] = (J0.d_xi2 - J1.d_xi2) - w.w * (J2.d_xi2 - J3.d_xi2);
  if (mask.d_xi3) r.d_xi[2] = (J0.d_xi3 - J1.d_xi3) - w.w * (J2.d_xi3 - J3.d_xi3);

  if (mask.d2_xi1xi1)
    r.d2_xi1xi1 = (J0.d2_xi1xi1 - J1.d2_xi1xi1) - w.w * (J2.d2_xi1xi1 - J3.d2_xi1xi1) -
                  2.0 * w.dw * g2d1 - w.d2w * g2v;
  if (mask.d2_xi2xi2)
    r.d2_xi2xi2 = (J0.d2_xi2xi2 - J1.d2_xi2xi2) - w.w * (J2.d2_xi2xi2 - J3.d2_xi2xi2);
  if (mask.d2_xi3xi3)
    r.d2_xi3xi3 = (J0.d2_xi3xi3 - J1.d2_xi3xi3) - w.w * (J2.d2_xi3xi3 - J3.d2_xi3xi3);
  if (mask.d2_xi1xi2)
    r.d2_xi1xi2 = (J0.d2_xi1xi2 - J1.d2_xi1xi2) - w.w * (J2.d2_xi1xi2 - J3.d2_xi1xi2) -
                  w.dw * (J2.d_xi2 - J3.d_xi2);
  if (mask.d2_xi1xi3)
    r.d2_xi1xi3 = (J0.d2_xi1xi3 - J1.d2_xi1xi3) - w.w * (J2.d2_xi1xi3 - J3.d2_xi1xi3) -
                  w.dw * (J2.d_xi3 - J3.d_xi3);

  if (mask.any_dx()) {
    const double q1 = 0.5 * spec.a.d1(x);
    const double q2 = 0.5 * spec.a.d2(x);
    const double q3 = 0.5 * spec.a.d3(x);
    // signed cutoff coefficients of the four terms in the value combination
    const double c[4] = {1.0, -1.0, -w.w, w.w};
    if (mask.d_x1) {
      double s = 0.0;
      for (int i = 0; i < 4; ++i)
        s += c[i] * (detail::term_dx1(t, i) + q1 * detail::term_dq(t, i));
      r.d_x[0] = s;
    }
    if (mask.d_x2) {
      double s = 0.0;
      for (int i = 0; i < 4; ++i)
        s += c[i] * (-t.J[i].d_xi2 + q2 * detail::term_dq(t, i));
      r.d_x[1] = s;
    }
    if (mask.d_x3) {
      double s = 0.0;
      for (int i = 0; i < 4; ++i)
        s += c[i] * (-t.J[i].d_xi3 + q3 * detail::term_dq(t, i));
      r.d_x[2] = s;
    }
  }
  return r;
}

// Slab parametrix frozen at the source point:
//   [g_(x1) - lm g_(2-x1)] - omega0(x1) [p g_(-x1) - p lp g_(2+x1)],
// vanishing at x1 = 0 and x1 = 1. Since q = a(xi)/2, first xi-derivatives
// carry the chain term (1/2) d_k a(xi) * d_q; second xi-derivatives would
// additionally need second partials of a, so they are served only for
// constant a (where every chain term vanishes).
inline ParametrixEval eval_tilde_slab(const Vec3& x, const Vec3& xi, const ProblemSpec& spec,
                                      const DerivMask& mask = DerivMask::value_only()) {
  detail::check_unit_interval(x.x, "tilde slab: x1");
  detail::check_unit_interval(xi.x, "tilde slab: xi1");
  if (mask.any_d2() && !spec.a.constant)
    throw DomainError(
        "second xi-derivatives of the tilde parametrix need constant a "
        "(chain rule through q = a(xi)/2 requires second partials of a)");
  const double q = 0.5 * spec.a.value(xi);
  const double eps = spec.eps;
  const CutoffJet w = omega0(x.x);

  detail::SlabTerms t = detail::build_slab_terms(x, xi, q, eps, mask.any_deriv());
  const double c[4] = {1.0, -w.w, -1.0, w.w};

  ParametrixEval r;
  r.saturated = t.saturated;
  for (int i = 0; i < 4; ++i) r.value += c[i] * t.J[i].value;
  if (!mask.any_deriv()) return r;

  double qx1 = 0.0, qx2 = 0.0, qx3 = 0.0;
  if (mask.any_dxi() && !spec.a.constant) {
    qx1 = 0.5 * spec.a.d1(xi);
    qx2 = 0.5 * spec.a.d2(xi);
    qx3 = 0.5 * spec.a.d3(xi);
  }
  if (mask.d_xi1) {
    double s = 0.0;
    for (int i = 0; i < 4; ++i) s += c[i] * (t.J[i].d_xi1 + qx1 * detail::term_dq(t, i));
    r.d_xi[0] = s;
  }
  if (mask.d_xi2) {
    double s = 0.0;
    for (int i = 0; i < 4; ++i) s += c[i] * (t.J[i].d_xi2 + qx2 * detail::term_dq(t, i));
    r.d_xi[1] = s;
  }
  if (mask.d_xi3) {
    double s = 0.0;
    for (int i = 0; i < 4; ++i) s += c[i] * (t.J[i].d_xi3 + qx3 * detail::term_dq(t, i));
    r.d_xi[2] = s;
  }

  if (mask.d_x1) {
    double s = 0.0;
    for (int i = 0; i < 4; ++i) s += c[i] * detail::term_dx1(t, i);
    // omega0(x1) is differentiated as well
    s -= w.dw * ((t.J[1].value) - (t.J[3].value));
    r.d_x[0] = s;
  }
  if (mask.d_x2) {
    double s = 0.0;
    for (int i = 0; i < 4; ++i) s += c[i] * (-t.J[i].d_xi2);
    r.d_x[1] = s;
  }
  if (mask.d_x3) {
    double s = 0.0;
    for (int i = 0; i < 4; ++i) s += c[i] * (-t.J[i].d_xi3);
    r.d_x[2] = s;
  }

  if (mask.d2_xi1xi1 || mask.d2_xi2xi2 || mask.d2_xi3xi3 || mask.d2_xi1xi2 || mask.d2_xi1xi3) {
    // constant a: plain weighted second derivatives, no cutoff in xi
    for (int i = 0; i < 4; ++i) {
      r.d2_xi1xi1 += c[i] * t.J[i].d2_xi1xi1;
      r.d2_xi2xi2 += c[i] * t.J[i].d2_xi2xi2;
      r.d2_xi3xi3 += c[i] * t.J[i].d2_xi3xi3;
      r.d2_xi1xi2 += c[i] * t.J[i].d2_xi1xi2;
      r.d2_xi1xi3 += c[i] * t.J[i].d2_xi1xi3;
    }
  }
  return r;
}

namespace detail {

// Rough magnitude bound used to skip mirrored slab evaluations whose fused
// exponents underflow anyway. Threshold carries a margin for the rational
// prefactors (<= exp(105) across the supported eps/q ranges), so a skipped
// term equals the 0.0 a full evaluation would produce.
inline bool slab_negligible(const Vec3& x, const Vec3& xi, double q, double eps) {
  const double d[4] = {x.x, -x.x, 2.0 - x.x, 2.0 + x.x};
  const double ty = (xi.y - x.y) / eps, tz = (xi.z - x.z) / eps;
  const double t2 = ty * ty + tz * tz;
  const double xi1x = (xi.x - x.x) / eps;
  for (int i = 0; i < 4; ++i) {
    const double a1 = (xi.x - d[i]) / eps;
    const double r = std::sqrt(a1 * a1 + t2);
    if (q * (xi1x - r) >= -850.0) return false;
  }
  return true;
}

struct MirrorSpec {
  int axis;        // 1 = second coordinate, 2 = third
  bool mirror_xi;  // reflect the target (bar) or the source (tilde)
};

// One reflection stage of the cube extension. Combines the direct evaluation
// with two mirrored ones (t -> -t and t -> 2-t, both with chain factor -1)
// under the matching cutoffs. Child must be callable as (x, xi, mask).
template <class Child>
ParametrixEval mirror_stage(const MirrorSpec& ms, const Vec3& x, const Vec3& xi,
                            const DerivMask& mask, Child&& child) {
  const int k = ms.axis;
  const double t = ms.mirror_xi ? xi[k] : x[k];
  check_unit_interval(t, "cube extension coordinate");
  const CutoffJet cw[2] = {omega0(t), omega1(t)};
  const double mirrored[2] = {-t, 2.0 - t};

  DerivMask cmask = mask;
  cmask.value = true;
  const bool stage_d1 = ms.mirror_xi ? (k == 1 ? mask.d_xi2 : mask.d_xi3)
                                     : (k == 1 ? mask.d_x2 : mask.d_x3);
  const bool stage_d2 = ms.mirror_xi && (k == 1 ? mask.d2_xi2xi2 : mask.d2_xi3xi3);
  const bool stage_mixed = ms.mirror_xi && (k == 1 ? mask.d2_xi1xi2 : mask.d2_xi1xi3);
  if (stage_d2) {
    if (k == 1) cmask.d_xi2 = true;
    else cmask.d_xi3 = true;
  }
  if (stage_mixed) cmask.d_xi1 = true;

  ParametrixEval r = child(x, xi, mask);
  for (int m = 0; m < 2; ++m) {
    const CutoffJet& c = cw[m];
    if (c.identically_zero()) continue;
    Vec3 xm = x, xim = xi;
    (ms.mirror_xi ? xim : xm)[k] = mirrored[m];
    ParametrixEval ch = child(xm, xim, cmask);
    r.saturated = r.saturated || ch.saturated;

    r.value -= c.w * ch.value;
    // pass-through components (the mirrored coordinate is not theirs)
    for (int a = 0; a < 3; ++a) {
      const bool own_xi = ms.mirror_xi && a == k;
      const bool own_x = !ms.mirror_xi && a == k;
      if (!own_xi) r.d_xi[a] -= c.w * ch.d_xi[a];
      if (!own_x) r.d_x[a] -= c.w * ch.d_x[a];
    }
    r.d2_xi1xi1 -= c.w * ch.d2_xi1xi1;
    if (ms.mirror_xi) {
      // the stage's own axis: product rule in t, chain dt'/dt = -1
      double& own = r.d_xi[k];
      const double ch_d1 = ch.d_xi[k];
      if (stage_d1) own -= c.dw * ch.value - c.w * ch_d1;
      if (k == 1) {
        if (stage_d2)
          r.d2_xi2xi2 -= c.d2w * ch.value - 2.0 * c.dw * ch_d1 + c.w * ch.d2_xi2xi2;
        else
          r.d2_xi2xi2 -= c.w * ch.d2_xi2xi2;
        r.d2_xi3xi3 -= c.w * ch.d2_xi3xi3;
        if (stage_mixed)
          r.d2_xi1xi2 -= c.dw * ch.d_xi[0] - c.w * ch.d2_xi1xi2;
        else
          r.d2_xi1xi2 -= c.w * ch.d2_xi1xi2;
        r.d2_xi1xi3 -= c.w * ch.d2_xi1xi3;
      } else {
        if (stage_d2)
          r.d2_xi3xi3 -= c.d2w * ch.value - 2.0 * c.dw * ch_d1 + c.w * ch.d2_xi3xi3;
        else
          r.d2_xi3xi3 -= c.w * ch.d2_xi3xi3;
        r.d2_xi2xi2 -= c.w * ch.d2_xi2xi2;
        if (stage_mixed)
          r.d2_xi1xi3 -= c.dw * ch.d_xi[0] - c.w * ch.d2_xi1xi3;
        else
          r.d2_xi1xi3 -= c.w * ch.d2_xi1xi3;
        r.d2_xi1xi2 -= c.w * ch.d2_xi1xi2;
      }
    } else {
      if (stage_d1) r.d_x[k] -= c.dw * ch.value - c.w * ch.d_x[k];
      r.d2_xi2xi2 -= c.w * ch.d2_xi2xi2;
      r.d2_xi3xi3 -= c.w * ch.d2_xi3xi3;
      r.d2_xi1xi2 -= c.w * ch.d2_xi1xi2;
      r.d2_xi1xi3 -= c.w * ch.d2_xi1xi3;
    }
  }
  return r;
}

}  // namespace detail

// Cube extensions: two nested reflection stages over the transverse
// coordinates. Bar reflects the target, tilde the source. Mirrored slab
// evaluations whose kernels underflow are skipped outright, so deep-interior
// evaluations cost exactly one slab assembly.
inline ParametrixEval eval_cube(const Vec3& x, const Vec3& xi, const ProblemSpec& spec,
                                ParametrixKind kind,
                                const DerivMask& mask = DerivMask::value_only()) {
  const bool bar = (kind == ParametrixKind::BarCube || kind == ParametrixKind::BarSlab);
  if (kind == ParametrixKind::BarSlab) return eval_bar_slab(x, xi, spec, mask);
  if (kind == ParametrixKind::TildeSlab) return eval_tilde_slab(x, xi, spec, mask);

  auto slab = [&spec, bar](const Vec3& xx, const Vec3& xxi, const DerivMask& m) {
    const double q = 0.5 * spec.a.value(bar ? xx : xxi);
    if (detail::slab_negligible(xx, xxi, q, spec.eps)) return ParametrixEval{};
    return bar ? eval_bar_slab(xx, xxi, spec, m) : eval_tilde_slab(xx, xxi, spec, m);
  };
  auto stage2 = [&](const Vec3& xx, const Vec3& xxi, const DerivMask& m) {
    return detail::mirror_stage({1, bar}, xx, xxi, m, slab);
  };
  return detail::mirror_stage({2, bar}, x, xi, mask, stage2);
}

inline ParametrixEval eval_parametrix(const Vec3& x, const Vec3& xi, const ProblemSpec& spec,
                                      ParametrixKind kind,
                                      const DerivMask& mask = DerivMask::value_only()) {
  return eval_cube(x, xi, spec, kind, mask);
}

// Defect of the slab parametrix under the corresponding frozen operator.
// Supported on the cutoff transition band only (xi1 in (1/6, 1/3) for bar,
// x1 in (2/3, 5/6) for tilde) and exponentially small in 1/eps there.
enum class ResidualKind { Bar, Tilde };

inline double residual_phi(const Vec3& x, const Vec3& xi, const ProblemSpec& spec,
                           ResidualKind kind) {
  detail::check_unit_interval(x.x, "residual: x1");
  detail::check_unit_interval(xi.x, "residual: xi1");
  const double eps = spec.eps;
  if (kind == ResidualKind::Bar) {
    const CutoffJet w = omega1(xi.x);
    if (w.dw == 0.0 && w.d2w == 0.0) return 0.0;
    const double q = 0.5 * spec.a.value(x);
    detail::SlabTerms t = detail::build_slab_terms(x, xi, q, eps, true);
    const double g2v = t.J[2].value - t.J[3].value;
    const double g2d1 = t.J[2].d_xi1 - t.J[3].d_xi1;
    return 2.0 * eps * w.dw * g2d1 + (eps * w.d2w - 2.0 * q * w.dw) * g2v;
  }
  const CutoffJet w = omega0(x.x);
  if (w.dw == 0.0 && w.d2w == 0.0) return 0.0;
  const double q = 0.5 * spec.a.value(xi);
  detail::SlabTerms t = detail::build_slab_terms(x, xi, q, eps, true);
  const double g2v = t.J[1].value - t.J[3].value;
  // x1-derivative of p g_(-x1) - p lp g_(2+x1) at fixed q
  const double g2dx1 = detail::term_dx1(t, 1) - detail::term_dx1(t, 3);
  return 2.0 * eps * w.dw * g2dx1 + (eps * w.d2w + 2.0 * q * w.dw) * g2v;
}

}  // namespace cdgreen
