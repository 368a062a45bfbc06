// Scaling-law fits for measured norm sequences. All fits are tiny closed-form
// least squares; the point is not statistics but checking that measured data
// track the asymptotic forms with stable leading constants.
#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "cdgreen/errors.hpp"

namespace cdgreen {

struct FitResult {
  std::string model;
  double c0 = 0.0;      // leading coefficient
  double c1 = 0.0;      // second coefficient (intercept, breakpoint, ...)
  double r2 = 0.0;
  double band_ratio = 0.0;  // max/min of the model-compensated data
  int n = 0;
};

namespace detail {

inline void require_same_size(size_t a, size_t b, const char* who) {
  if (a != b || a == 0) throw DomainError(std::string(who) + ": empty or mismatched data");
}

inline double clamp01(double v) { return std::max(0.0, std::min(1.0, v)); }

}  // namespace detail

// y ~ c (constant law). c is the geometric mean; band_ratio = max/min.
inline FitResult fit_const(const std::vector<double>& y) {
  if (y.empty()) throw DomainError("fit_const: no data");
  double lnsum = 0.0, lo = 1e300, hi = -1e300;
  for (double v : y) {
    if (!(v > 0.0)) throw DomainError("fit_const: data must be positive");
    lnsum += std::log(v);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  FitResult f;
  f.model = "const";
  f.n = static_cast<int>(y.size());
  f.c0 = std::exp(lnsum / y.size());
  f.band_ratio = hi / lo;
  f.r2 = 1.0;
  return f;
}

// y ~ c1 + c0 * t (used with t = ln(1/eps)). Centered R^2.
inline FitResult fit_affine(const std::vector<double>& t, const std::vector<double>& y) {
  detail::require_same_size(t.size(), y.size(), "fit_affine");
  const size_t n = t.size();
  double st = 0, sy = 0;
  for (size_t i = 0; i < n; ++i) {
    st += t[i];
    sy += y[i];
  }
  const double mt = st / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (size_t i = 0; i < n; ++i) {
    sxx += (t[i] - mt) * (t[i] - mt);
    sxy += (t[i] - mt) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw DomainError("fit_affine: degenerate abscissae");
  FitResult f;
  f.model = "affine";
  f.n = static_cast<int>(n);
  f.c0 = sxy / sxx;
  f.c1 = my - f.c0 * mt;
  double ssr = 0;
  for (size_t i = 0; i < n; ++i) {
    const double r = y[i] - (f.c1 + f.c0 * t[i]);
    ssr += r * r;
  }
  f.r2 = syy > 0 ? detail::clamp01(1.0 - ssr / syy) : 1.0;
  double lo = 1e300, hi = -1e300;
  for (size_t i = 0; i < n; ++i) {
    const double m = f.c1 + f.c0 * t[i];
    if (m > 0 && y[i] > 0) {
      lo = std::min(lo, y[i] / m);
      hi = std::max(hi, y[i] / m);
    }
  }
  f.band_ratio = (lo <= hi) ? hi / lo : 0.0;
  return f;
}

// y ~ c0 * eps^(-beta) with beta free: log-log regression. c1 returns beta.
inline FitResult fit_power(const std::vector<double>& eps, const std::vector<double>& y) {
  detail::require_same_size(eps.size(), y.size(), "fit_power");
  std::vector<double> t(eps.size()), ly(eps.size());
  for (size_t i = 0; i < eps.size(); ++i) {
    if (!(eps[i] > 0) || !(y[i] > 0)) throw DomainError("fit_power: data must be positive");
    t[i] = std::log(1.0 / eps[i]);
    ly[i] = std::log(y[i]);
  }
  FitResult f = fit_affine(t, ly);
  FitResult out;
  out.model = "power";
  out.n = f.n;
  out.c0 = std::exp(f.c1);
  out.c1 = f.c0;  // exponent beta in eps^(-beta)
  out.r2 = f.r2;
  double lo = 1e300, hi = -1e300;
  for (size_t i = 0; i < eps.size(); ++i) {
    const double comp = y[i] * std::pow(eps[i], out.c1);
    lo = std::min(lo, comp);
    hi = std::max(hi, comp);
  }
  out.band_ratio = hi / lo;
  return out;
}

// Single-coefficient fit y ~ c0 * shape_i. Uncentered R^2 (the model has no
// intercept, so centering would punish exactly proportional data).
inline FitResult fit_shape(const std::vector<double>& shape, const std::vector<double>& y,
                           const std::string& name) {
  detail::require_same_size(shape.size(), y.size(), "fit_shape");
  double sm = 0, sy2 = 0;
  for (size_t i = 0; i < shape.size(); ++i) {
    sm += shape[i] * shape[i];
    sy2 += y[i] * y[i];
  }
  if (sm == 0.0) throw DomainError("fit_shape: zero shape");
  double sxy = 0;
  for (size_t i = 0; i < shape.size(); ++i) sxy += shape[i] * y[i];
  FitResult f;
  f.model = name;
  f.n = static_cast<int>(shape.size());
  f.c0 = sxy / sm;
  double ssr = 0;
  for (size_t i = 0; i < shape.size(); ++i) {
    const double r = y[i] - f.c0 * shape[i];
    ssr += r * r;
  }
  f.r2 = sy2 > 0 ? detail::clamp01(1.0 - ssr / sy2) : 1.0;
  double lo = 1e300, hi = -1e300;
  for (size_t i = 0; i < shape.size(); ++i) {
    if (shape[i] > 0 && y[i] > 0) {
      lo = std::min(lo, y[i] / shape[i]);
      hi = std::max(hi, y[i] / shape[i]);
    }
  }
  f.band_ratio = (lo <= hi) ? hi / lo : 0.0;
  return f;
}

// y ~ c0 * eps^-1 * ln(2 + eps/rho) over an (eps, rho) list.
inline FitResult fit_ball_log(const std::vector<double>& eps, const std::vector<double>& rho,
                              const std::vector<double>& y, bool add_lneps) {
  detail::require_same_size(eps.size(), y.size(), "fit_ball_log");
  detail::require_same_size(rho.size(), y.size(), "fit_ball_log");
  std::vector<double> shape(eps.size());
  for (size_t i = 0; i < eps.size(); ++i) {
    shape[i] = (std::log(2.0 + eps[i] / rho[i]) + (add_lneps ? std::log(1.0 / eps[i]) : 0.0)) /
               eps[i];
  }
  return fit_shape(shape, y, add_lneps ? "ball_log_lneps" : "ball_log");
}

// Two-regime ball gradient law at fixed eps:
//   y ~ c0 * (rho/eps)        for rho <= rho*
//   y ~ c0 * sqrt(rho*/eps) * sqrt(rho/eps)  for rho > rho*  (continuous knee)
// The knee rho* (returned in c1) is picked by scanning a geometric grid and
// minimizing log-space SSE; r2 is computed in log space.
inline FitResult fit_two_regime(const std::vector<double>& rho, const std::vector<double>& y,
                                double eps) {
  detail::require_same_size(rho.size(), y.size(), "fit_two_regime");
  if (rho.size() < 3) throw DomainError("fit_two_regime: need at least 3 radii");
  for (size_t i = 0; i < rho.size(); ++i)
    if (!(rho[i] > 0) || !(y[i] > 0)) throw DomainError("fit_two_regime: data must be positive");
  const double lo = *std::min_element(rho.begin(), rho.end());
  const double hi = *std::max_element(rho.begin(), rho.end());
  FitResult best;
  best.model = "two_regime";
  best.n = static_cast<int>(rho.size());
  double best_sse = 1e300;
  const int steps = 160;
  for (int s = 0; s <= steps; ++s) {
    const double rs = lo * std::pow(hi / lo, static_cast<double>(s) / steps);
    // log-space LSQ for ln c0 given the knee
    double acc = 0.0;
    std::vector<double> lshape(rho.size());
    for (size_t i = 0; i < rho.size(); ++i) {
      const double shape =
          rho[i] <= rs ? rho[i] / eps : std::sqrt(rs / eps) * std::sqrt(rho[i] / eps);
      lshape[i] = std::log(shape);
      acc += std::log(y[i]) - lshape[i];
    }
    const double lc = acc / rho.size();
    double sse = 0.0;
    for (size_t i = 0; i < rho.size(); ++i) {
      const double r = std::log(y[i]) - lc - lshape[i];
      sse += r * r;
    }
    if (sse < best_sse) {
      best_sse = sse;
      best.c0 = std::exp(lc);
      best.c1 = rs;
    }
  }
  // log-space centered R^2 against the best knee
  double my = 0.0;
  for (size_t i = 0; i < rho.size(); ++i) my += std::log(y[i]);
  my /= rho.size();
  double syy = 0.0;
  for (size_t i = 0; i < rho.size(); ++i) {
    const double d = std::log(y[i]) - my;
    syy += d * d;
  }
  best.r2 = syy > 0 ? detail::clamp01(1.0 - best_sse / syy) : 1.0;
  best.band_ratio = 0.0;
  return best;
}

// Study verdicts are pure functions of fit results so they can be tested
// without running any quadrature.
enum class Verdict { Consistent, Inconclusive, Inconsistent };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Consistent: return "consistent";
    case Verdict::Inconclusive: return "inconclusive";
    default: return "inconsistent";
  }
}

// A scaling law is "consistent" when the fit is tight (r2), the leading
// coefficient is strictly positive, and the compensated data stay inside a
// factor-2 band. had_errors marks entries that failed to integrate, which
// degrades the verdict to inconclusive rather than inconsistent.
inline Verdict judge(const FitResult& f, double r2_min, bool had_errors,
                     double band_max = 2.0) {
  if (had_errors || f.n < 3) return Verdict::Inconclusive;
  // band_max <= 0 disables the band constraint (r2-only criteria)
  const bool band_ok = band_max <= 0.0 || f.band_ratio == 0.0 || f.band_ratio <= band_max;
  if (f.c0 > 0.0 && f.r2 >= r2_min && band_ok) return Verdict::Consistent;
  return Verdict::Inconsistent;
}

}  // namespace cdgreen
