// Problem data: coefficients, domain, admissibility checks.
#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>

#include "cdgreen/errors.hpp"
#include "cdgreen/vec.hpp"

namespace cdgreen {

using ScalarField = std::function<double(const Vec3&)>;

// Smooth scalar coefficient with analytic (or wrapped finite-difference) first partials.
struct CoefficientField {
  std::string name;
  ScalarField value;
  ScalarField d1, d2, d3;  // partials in x1, x2, x3
  bool constant = false;   // enables closed forms that need frozen coefficients

  double partial(int axis, const Vec3& p) const {
    return axis == 0 ? d1(p) : (axis == 1 ? d2(p) : d3(p));
  }
};

// Central-difference partials for a value-only coefficient. Step (machine eps)^(1/3)
// balances truncation against rounding for C^2 fields.
inline CoefficientField fd_coefficient(std::string name, ScalarField f) {
  const double h = std::cbrt(std::numeric_limits<double>::epsilon());
  auto part = [f, h](int axis) {
    return [f, h, axis](const Vec3& p) {
      Vec3 lo = p, hi = p;
      lo[axis] -= h;
      hi[axis] += h;
      return (f(hi) - f(lo)) / (2.0 * h);
    };
  };
  CoefficientField c;
  c.name = std::move(name);
  c.value = std::move(f);
  c.d1 = part(0);
  c.d2 = part(1);
  c.d3 = part(2);
  return c;
}

inline CoefficientField constant_coefficient(std::string name, double v) {
  CoefficientField c;
  c.name = std::move(name);
  c.value = [v](const Vec3&) { return v; };
  c.d1 = c.d2 = c.d3 = [](const Vec3&) { return 0.0; };
  c.constant = true;
  return c;
}

enum class Domain { Slab, Cube };

// -eps*Lap(u) - d/dx1(a u) + b u on the unit cube (or the slab 0 < x1 < 1),
// homogeneous Dirichlet data. Admissibility: a >= alpha > 0 and b - d/dx1 a >= 0.
struct ProblemSpec {
  double eps = 0.1;
  double alpha = 1.0;
  CoefficientField a;
  CoefficientField b;
  Domain domain = Domain::Cube;

  ProblemSpec with_eps(double e) const {
    ProblemSpec s = *this;
    s.eps = e;
    return s;
  }
};

inline ProblemSpec make_preset(const std::string& name, double eps = 0.1) {
  ProblemSpec s;
  s.eps = eps;
  if (name == "const") {
    s.alpha = 1.0;
    s.a = constant_coefficient("a=1", 1.0);
    s.b = constant_coefficient("b=0", 0.0);
  } else if (name == "smooth1") {
    s.alpha = 1.75;
    s.a.name = "a=2+cos(pi x1)/4";
    s.a.value = [](const Vec3& p) { return 2.0 + 0.25 * std::cos(M_PI * p.x); };
    s.a.d1 = [](const Vec3& p) { return -0.25 * M_PI * std::sin(M_PI * p.x); };
    s.a.d2 = s.a.d3 = [](const Vec3&) { return 0.0; };
    s.b = constant_coefficient("b=1", 1.0);
  } else {
    throw ConfigError("unknown problem preset: " + name);
  }
  return s;
}

struct ValidationReport {
  bool pass = false;
  double min_a_minus_alpha = 0.0;
  Vec3 argmin_a;
  double min_b_minus_da = 0.0;
  Vec3 argmin_b;
  long long n_checked = 0;
  std::string message;  // set when a sample produced a non-finite value
};

namespace detail {

// Van der Corput radical inverse.
inline double radical_inverse(unsigned long long i, unsigned base) {
  double inv = 1.0 / base, f = inv, r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return r;
}

// Deterministic point set on the closed cube. The first nine points are the
// corners plus the center (the admissibility minima often sit on faces), then
// a Halton sequence fills the interior. Prefix-nested: sample(n) is a prefix
// of sample(m) for n <= m.
inline Vec3 sample_point(long long k) {
  if (k < 8) {
    return {static_cast<double>(k & 1), static_cast<double>((k >> 1) & 1),
            static_cast<double>((k >> 2) & 1)};
  }
  if (k == 8) return {0.5, 0.5, 0.5};
  const unsigned long long i = static_cast<unsigned long long>(k - 8);
  return {radical_inverse(i, 2), radical_inverse(i, 3), radical_inverse(i, 5)};
}

}  // namespace detail

// Checks a >= alpha and b - d/dx1 a >= 0 on a nested deterministic sample.
// Tolerance 1e-12 absorbs rounding in user-supplied coefficient formulas.
inline ValidationReport validate_problem(const ProblemSpec& spec, long long n_samples = 4096) {
  ValidationReport rep;
  rep.min_a_minus_alpha = std::numeric_limits<double>::infinity();
  rep.min_b_minus_da = std::numeric_limits<double>::infinity();
  if (spec.eps <= 0.0 || spec.alpha <= 0.0) {
    rep.message = "eps and alpha must be positive";
    return rep;
  }
  for (long long k = 0; k < n_samples; ++k) {
    const Vec3 p = detail::sample_point(k);
    const double av = spec.a.value(p);
    const double da = spec.a.d1(p);
    const double bv = spec.b.value(p);
    if (!std::isfinite(av) || !std::isfinite(da) || !std::isfinite(bv)) {
      rep.message = "non-finite coefficient value in the sampled cube";
      rep.pass = false;
      rep.n_checked = k + 1;
      return rep;
    }
    if (av - spec.alpha < rep.min_a_minus_alpha) {
      rep.min_a_minus_alpha = av - spec.alpha;
      rep.argmin_a = p;
    }
    if (bv - da < rep.min_b_minus_da) {
      rep.min_b_minus_da = bv - da;
      rep.argmin_b = p;
    }
  }
  rep.n_checked = n_samples;
  const double tol = 1e-12;
  rep.pass = rep.min_a_minus_alpha >= -tol && rep.min_b_minus_da >= -tol;
  return rep;
}

}  // namespace cdgreen
