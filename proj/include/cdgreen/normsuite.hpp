// Named L1-type quantities of a parametrix and the driver that measures a
// full set of them at one (x, eps). Each entry is computed independently and
// failures (budget, divergence) are captured per entry instead of aborting
// the suite.
#pragma once

#include <chrono>
#include <cmath>
#include <string>
#include <vector>

#include "cdgreen/quadrature.hpp"

namespace cdgreen {

enum class NormQuantity {
  DXi1L1,       // ||d_xi1 G||_1 over the domain
  DXi2L1,       // ||d_xi2 G||_1
  DXi3L1,       // ||d_xi3 G||_1
  DX2L1,        // ||d_x2 G||_1 (transverse source derivative)
  DX3L1,        // ||d_x3 G||_1
  BallW11,      // ||G||_{1,1} over B(x', rho) intersected with the domain
  D2Xi1L1Excl,  // ||d2_xi1 G||_1 outside B(x', rho)
  D2Xi2L1Excl,  // ||d2_xi2 G||_1 outside B(x', rho)
  D2Xi3L1Excl,  // ||d2_xi3 G||_1 outside B(x', rho)
  GL1,          // ||G||_1
  CrossplaneSup  // max over stations of the transverse-plane integral of |G|
};

inline const char* to_string(NormQuantity q) {
  switch (q) {
    case NormQuantity::DXi1L1: return "dxi1_L1";
    case NormQuantity::DXi2L1: return "dxi2_L1";
    case NormQuantity::DXi3L1: return "dxi3_L1";
    case NormQuantity::DX2L1: return "dx2_L1";
    case NormQuantity::DX3L1: return "dx3_L1";
    case NormQuantity::BallW11: return "ball_W11";
    case NormQuantity::D2Xi1L1Excl: return "d2xi1_L1_excl";
    case NormQuantity::D2Xi2L1Excl: return "d2xi2_L1_excl";
    case NormQuantity::D2Xi3L1Excl: return "d2xi3_L1_excl";
    case NormQuantity::GL1: return "G_L1";
    default: return "crossplane_sup";
  }
}

struct NormEntry {
  NormQuantity quantity{};
  double rho = 0.0;  // 0 when the quantity has no ball parameter
  QuadResult result;
  double wall_ms = 0.0;
  bool ok = false;
  std::string error;
};

struct NormReport {
  Vec3 x;
  double eps = 0.0;
  ParametrixKind variant = ParametrixKind::BarCube;
  std::vector<NormEntry> entries;

  const NormEntry* find(NormQuantity q, double rho = 0.0) const {
    for (const NormEntry& e : entries)
      if (e.quantity == q && e.rho == rho) return &e;
    return nullptr;
  }
};

struct NormSuiteOptions {
  std::vector<double> rho_list;  // radii for BallW11 and the exclusion norms
  std::optional<Vec3> x_prime;   // ball center; defaults to x
  double tol = 1e-3;
  long long budget = 50000000;
  double slab_halfwidth = 0.0;       // 0 = default formula
  std::vector<double> crossplanes;   // xi1 stations; empty = default set
  bool with_crossplane = true;
  bool with_x_derivs = true;
  bool with_second = true;
  bool with_first = true;
  bool with_value = true;
};

namespace detail {

inline std::vector<double> default_crossplanes(const Vec3& x, double eps) {
  std::vector<double> s = {0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875,
                           x.x - 16.0 * eps, x.x - 4.0 * eps, x.x + 4.0 * eps, x.x + 16.0 * eps};
  std::vector<double> out;
  for (double v : s) {
    if (v <= 1e-6 || v >= 1.0 - 1e-6) continue;
    if (std::abs(v - x.x) < 2.0 * eps) continue;  // skip the near-singular band
    bool dup = false;
    for (double u : out)
      if (std::abs(u - v) < 1e-12) dup = true;
    if (!dup) out.push_back(v);
  }
  return out;
}

}  // namespace detail

// Measures the requested quantities for one parametrix at one (x, eps).
// Derivative masks request only the components each integrand needs.
inline NormReport norm_suite(const Vec3& x, const ProblemSpec& spec, ParametrixKind variant,
                             const NormSuiteOptions& opt = {}) {
  NormReport rep;
  rep.x = x;
  rep.eps = spec.eps;
  rep.variant = variant;

  const double q = 0.5 * spec.a.value(x);
  const bool slab = (variant == ParametrixKind::BarSlab || variant == ParametrixKind::TildeSlab);
  Region base = Region::cube();
  if (slab || spec.domain == Domain::Slab) {
    const double w =
        opt.slab_halfwidth > 0.0 ? opt.slab_halfwidth : default_slab_halfwidth(spec.eps, q);
    base = Region::slab(w);
  }
  const Vec3 xp = opt.x_prime ? *opt.x_prime : x;

  auto run = [&](NormQuantity qty, double rho, const Region& region,
                 const std::function<double(const Vec3&)>& field) {
    NormEntry e;
    e.quantity = qty;
    e.rho = rho;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      e.result = l1_norm(field, region, x, spec.eps, opt.tol, opt.budget);
      e.ok = true;
    } catch (const BudgetError& ex) {
      e.result.value = ex.partial_value;
      e.result.error_estimate = ex.partial_error;
      e.result.cells = ex.cells;
      e.result.eps = spec.eps;
      e.result.rho = rho;
      e.error = ex.what();
    } catch (const std::exception& ex) {
      e.error = ex.what();
    }
    e.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                    .count();
    rep.entries.push_back(std::move(e));
  };

  if (opt.with_first) {
    for (int k = 0; k < 3; ++k) {
      DerivMask m;
      m.value = false;
      m.d_xi1 = (k == 0);
      m.d_xi2 = (k == 1);
      m.d_xi3 = (k == 2);
      auto field = [x, &spec, variant, m, k](const Vec3& xi) {
        return eval_parametrix(x, xi, spec, variant, m).d_xi[k];
      };
      run(k == 0 ? NormQuantity::DXi1L1 : (k == 1 ? NormQuantity::DXi2L1 : NormQuantity::DXi3L1),
          0.0, base, field);
    }
  }
  if (opt.with_x_derivs) {
    for (int k = 1; k < 3; ++k) {
      DerivMask m;
      m.value = false;
      m.d_x2 = (k == 1);
      m.d_x3 = (k == 2);
      auto field = [x, &spec, variant, m, k](const Vec3& xi) {
        return eval_parametrix(x, xi, spec, variant, m).d_x[k];
      };
      run(k == 1 ? NormQuantity::DX2L1 : NormQuantity::DX3L1, 0.0, base, field);
    }
  }
  for (double rho : opt.rho_list) {
    {
      DerivMask m = DerivMask::first_xi();
      auto field = [x, &spec, variant, m](const Vec3& xi) {
        const ParametrixEval e = eval_parametrix(x, xi, spec, variant, m);
        return std::abs(e.value) + std::abs(e.d_xi.x) + std::abs(e.d_xi.y) + std::abs(e.d_xi.z);
      };
      run(NormQuantity::BallW11, rho, base.intersecting({xp, rho}), field);
    }
    if (opt.with_second) {
      for (int k = 0; k < 3; ++k) {
        DerivMask m;
        m.value = false;
        m.d2_xi1xi1 = (k == 0);
        m.d2_xi2xi2 = (k == 1);
        m.d2_xi3xi3 = (k == 2);
        auto field = [x, &spec, variant, m, k](const Vec3& xi) {
          const ParametrixEval e = eval_parametrix(x, xi, spec, variant, m);
          return k == 0 ? e.d2_xi1xi1 : (k == 1 ? e.d2_xi2xi2 : e.d2_xi3xi3);
        };
        run(k == 0 ? NormQuantity::D2Xi1L1Excl
                   : (k == 1 ? NormQuantity::D2Xi2L1Excl : NormQuantity::D2Xi3L1Excl),
            rho, base.excluding({xp, rho}), field);
      }
    }
  }
  if (opt.with_value) {
    auto field = [x, &spec, variant](const Vec3& xi) {
      return eval_parametrix(x, xi, spec, variant).value;
    };
    run(NormQuantity::GL1, 0.0, base, field);
  }
  if (opt.with_crossplane) {
    NormEntry e;
    e.quantity = NormQuantity::CrossplaneSup;
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<double> stations =
        opt.crossplanes.empty() ? detail::default_crossplanes(x, spec.eps) : opt.crossplanes;
    const FieldVariant fv = [variant]() {
      switch (variant) {
        case ParametrixKind::BarSlab: return FieldVariant::BarSlab;
        case ParametrixKind::TildeSlab: return FieldVariant::TildeSlab;
        case ParametrixKind::BarCube: return FieldVariant::BarCube;
        default: return FieldVariant::TildeCube;
      }
    }();
    try {
      for (double s : stations) {
        const QuadResult r = crossplane_integral(x, s, spec, fv, std::max(opt.tol, 1e-6),
                                                 opt.budget);
        if (r.value > e.result.value) e.result.value = r.value;
        e.result.error_estimate = std::max(e.result.error_estimate, r.error_estimate);
        e.result.cells += r.cells;
        e.result.evals += r.evals;
      }
      e.result.eps = spec.eps;
      e.ok = !stations.empty();
      if (stations.empty()) e.error = "no usable cross-plane stations";
    } catch (const std::exception& ex) {
      e.error = ex.what();
    }
    e.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                    .count();
    rep.entries.push_back(std::move(e));
  }
  return rep;
}

}  // namespace cdgreen
