#include <catch_amalgamated.hpp>

#include <cmath>

#include "cdgreen/cutoff.hpp"
#include "cdgreen/parametrix.hpp"

using namespace cdgreen;
using Catch::Approx;

namespace {

double halton(int i, int base) {
  double f = 1.0, r = 0.0;
  while (i > 0) {
    f /= base;
    r += f * (i % base);
    i /= base;
  }
  return r;
}

constexpr ParametrixKind kAllKinds[] = {ParametrixKind::BarSlab, ParametrixKind::TildeSlab,
                                        ParametrixKind::BarCube, ParametrixKind::TildeCube};

}  // namespace

TEST_CASE("cutoff is a C2 ramp between exact plateaus") {
  CHECK(omega0(0.0).w == 1.0);
  CHECK(omega0(kCutLo).w == 1.0);
  CHECK(omega0(kCutLo).dw == 0.0);
  CHECK(omega0(kCutHi).w == 0.0);
  CHECK(omega0(1.0).w == 0.0);
  CHECK(omega0(0.75).w == Approx(0.5).epsilon(1e-14));  // symmetric midpoint

  // jet continuity across both junctions (the jump shrinks linearly with d)
  for (double t0 : {kCutLo, kCutHi}) {
    const double d = 1e-8;
    const CutoffJet lo = omega0(t0 - d), hi = omega0(t0 + d);
    CHECK(std::abs(lo.w - hi.w) < 1e-7);
    CHECK(std::abs(lo.dw - hi.dw) < 1e-5);
    CHECK(std::abs(lo.d2w - hi.d2w) < 2e-4);
  }

  // derivative against a central difference inside the ramp
  const double t = 0.71, h = 1e-6;
  CHECK(omega0(t).dw == Approx((omega0(t + h).w - omega0(t - h).w) / (2 * h)).epsilon(1e-7));
  CHECK(omega0(t).d2w == Approx((omega0(t + h).dw - omega0(t - h).dw) / (2 * h)).epsilon(1e-7));

  // mirrored ramp
  CHECK(omega1(0.2).w == Approx(omega0(0.8).w).epsilon(1e-14));
  CHECK(omega1(0.29).dw == Approx(-omega0(0.71).dw).epsilon(1e-12));

  CHECK_THROWS_AS(omega0(-0.01), DomainError);
  CHECK_THROWS_AS(omega1(1.01), DomainError);
}

TEST_CASE("slab parametrices vanish on the inflow and outflow faces") {
  const ProblemSpec spec = make_preset("smooth1", 0.05);
  for (double x1 : {0.3, 0.75}) {
    const Vec3 x{x1, 0.5, 0.55};
    const double interior =
        std::abs(eval_bar_slab(x, {x1 + 0.1, 0.5, 0.55}, spec).value);
    REQUIRE(interior > 0.0);
    for (int n = 1; n <= 12; ++n) {
      const Vec3 face0{0.0, 2.0 * halton(n, 2), 2.0 * halton(n, 3) - 0.5};
      const Vec3 face1{1.0, face0.y, face0.z};
      CHECK(std::abs(eval_bar_slab(x, face0, spec).value) <= 1e-13 * interior);
      CHECK(std::abs(eval_bar_slab(x, face1, spec).value) <= 1e-13 * interior);
      CHECK(std::abs(eval_tilde_slab(x, face1, spec).value) <= 1e-13 * interior);
      if (x1 < kCutLo)  // source-side cancellation holds on the cutoff plateau
        CHECK(std::abs(eval_tilde_slab(x, face0, spec).value) <= 1e-13 * interior);
    }
  }
}

// Each construction satisfies the Dirichlet condition in its own variable:
// the bar form vanishes for xi on the boundary, the tilde form for x there.
TEST_CASE("cube parametrices vanish on all six faces of their variable") {
  const ProblemSpec spec = make_preset("smooth1", 0.04);
  const Vec3 inner{0.35, 0.6, 0.45}, probe{0.45, 0.6, 0.45};
  const double interior =
      std::abs(eval_parametrix(inner, probe, spec, ParametrixKind::BarCube).value);
  REQUIRE(interior > 0.0);
  for (int face = 0; face < 6; ++face)
    for (int n = 1; n <= 8; ++n) {
      Vec3 p{halton(n, 2), halton(n, 3), halton(n, 5)};
      p[face / 2] = (face % 2) ? 1.0 : 0.0;
      CHECK(std::abs(eval_parametrix(inner, p, spec, ParametrixKind::BarCube).value) <=
            1e-12 * interior);
      CHECK(std::abs(eval_parametrix(p, probe, spec, ParametrixKind::TildeCube).value) <=
            1e-12 * interior);
    }
}

// Oracle: every derivative the mask exposes must match a central difference
// of independently evaluated values. This exercises the weight derivatives,
// the drift-parameter chain terms, and the mirror stages in one sweep.
TEST_CASE("analytic derivatives match central differences of the value") {
  const double eps = 0.05;
  const ProblemSpec smooth = make_preset("smooth1", eps);
  const ProblemSpec cnst = make_preset("const", eps);
  const Vec3 x{0.45, 0.5, 0.55};

  for (ParametrixKind kind : kAllKinds) {
    for (bool constant_a : {false, true}) {
      const ProblemSpec& spec = constant_a ? cnst : smooth;
      const bool tilde =
          (kind == ParametrixKind::TildeSlab || kind == ParametrixKind::TildeCube);
      DerivMask mask = DerivMask::everything();
      if (tilde && !constant_a) mask.d2_xi1xi1 = mask.d2_xi2xi2 = mask.d2_xi3xi3 =
                                    mask.d2_xi1xi2 = mask.d2_xi1xi3 = false;

      double worst1 = 0.0, worst2 = 0.0;
      for (int n = 1; n <= 15; ++n) {
        Vec3 xi{0.1 + 0.8 * halton(n, 2), 0.1 + 0.8 * halton(n, 3), 0.1 + 0.8 * halton(n, 5)};
        if (dist(xi, x) < 3.0 * eps) xi.x = x.x + 0.25;  // keep off the singularity

        const ParametrixEval pe = eval_parametrix(x, xi, spec, kind, mask);
        CHECK_FALSE(pe.saturated);
        const double h = 2e-6;
        auto val = [&](const Vec3& xx, const Vec3& xxi) {
          return eval_parametrix(xx, xxi, spec, kind).value;
        };
        auto dxi1 = [&](const Vec3& xxi) {
          return eval_parametrix(x, xxi, spec, kind, DerivMask::first_xi());
        };
        const double scale = std::abs(pe.value) / h + 1e-300;
        auto rel = [](double got, double fd, double fl) {
          return std::abs(got - fd) / std::max(std::abs(fd), fl);
        };
        for (int a = 0; a < 3; ++a) {
          Vec3 p = xi, m = xi;
          p[a] += h;
          m[a] -= h;
          worst1 = std::max(worst1, rel(a == 0 ? pe.d_xi.x : (a == 1 ? pe.d_xi.y : pe.d_xi.z),
                                        (val(x, p) - val(x, m)) / (2 * h), 1e-4 * scale));
          Vec3 xp = x, xm = x;
          xp[a] += h;
          xm[a] -= h;
          worst1 = std::max(worst1, rel(a == 0 ? pe.d_x.x : (a == 1 ? pe.d_x.y : pe.d_x.z),
                                        (val(xp, xi) - val(xm, xi)) / (2 * h), 1e-4 * scale));
        }
        if (mask.d2_xi1xi1) {
          const double dscale =
              (std::abs(pe.d_xi.x) + std::abs(pe.d_xi.y) + std::abs(pe.d_xi.z)) / h + 1e-300;
          for (int a = 0; a < 3; ++a) {
            Vec3 p = xi, m = xi;
            p[a] += h;
            m[a] -= h;
            const ParametrixEval jp = dxi1(p), jm = dxi1(m);
            const double diag = a == 0 ? pe.d2_xi1xi1 : (a == 1 ? pe.d2_xi2xi2 : pe.d2_xi3xi3);
            const double fd_diag =
                ((a == 0 ? jp.d_xi.x : (a == 1 ? jp.d_xi.y : jp.d_xi.z)) -
                 (a == 0 ? jm.d_xi.x : (a == 1 ? jm.d_xi.y : jm.d_xi.z))) /
                (2 * h);
            worst2 = std::max(worst2, rel(diag, fd_diag, 1e-4 * dscale));
            if (a > 0) {
              const double mixed = a == 1 ? pe.d2_xi1xi2 : pe.d2_xi1xi3;
              worst2 = std::max(worst2, rel(mixed, (jp.d_xi.x - jm.d_xi.x) / (2 * h), 1e-4 * dscale));
            }
          }
        }
      }
      INFO(to_string(kind) << (constant_a ? " const" : " smooth1"));
      CHECK(worst1 < 2e-5);
      CHECK(worst2 < 2e-5);
    }
  }
}

TEST_CASE("tilde second derivatives demand frozen coefficients") {
  const ProblemSpec smooth = make_preset("smooth1", 0.05);
  const Vec3 x{0.4, 0.5, 0.5}, xi{0.6, 0.5, 0.5};
  CHECK_THROWS_AS(eval_parametrix(x, xi, smooth, ParametrixKind::TildeSlab,
                                  DerivMask::everything()),
                  DomainError);
  CHECK_THROWS_AS(eval_parametrix(x, xi, smooth, ParametrixKind::TildeCube,
                                  DerivMask::everything()),
                  DomainError);
  // first derivatives stay available
  CHECK_NOTHROW(eval_parametrix(x, xi, smooth, ParametrixKind::TildeCube,
                                DerivMask::first_xi()));
}

TEST_CASE("cube extension collapses to the slab away from the side walls") {
  const ProblemSpec spec = make_preset("const", 0.01);
  const Vec3 x{0.5, 0.5, 0.5};
  for (int n = 1; n <= 10; ++n) {
    const Vec3 xi{0.3 + 0.4 * halton(n, 2), 0.35 + 0.3 * halton(n, 3),
                  0.35 + 0.3 * halton(n, 5)};
    const double slab = eval_parametrix(x, xi, spec, ParametrixKind::BarSlab).value;
    const double cube = eval_parametrix(x, xi, spec, ParametrixKind::BarCube).value;
    if (slab == 0.0)
      CHECK(cube == 0.0);
    else
      CHECK(cube == Approx(slab).epsilon(1e-13));
  }
}

TEST_CASE("bar and tilde agree deep inside for frozen coefficients") {
  // with a constant drift both constructions share q; they differ only in
  // image bookkeeping that is exponentially negligible in the interior
  const ProblemSpec spec = make_preset("const", 0.02);
  const Vec3 x{0.5, 0.45, 0.5};
  for (const Vec3& xi : {Vec3{0.55, 0.45, 0.5}, Vec3{0.62, 0.5, 0.48}, Vec3{0.45, 0.44, 0.52}}) {
    const double bar = eval_parametrix(x, xi, spec, ParametrixKind::BarCube).value;
    const double tilde = eval_parametrix(x, xi, spec, ParametrixKind::TildeCube).value;
    CHECK(bar == Approx(tilde).epsilon(1e-10));
  }
}

// The defect fields against a finite-difference application of the frozen
// operators: adjoint (-eps*Lap + 2q d/dxi1 in xi) for the bar construction,
// primal (-eps*Lap - 2q d/dx1 in x) for the tilde one.
TEST_CASE("residual fields match the operator applied by finite differences") {
  const ProblemSpec spec = make_preset("const", 0.1);
  const double eps = spec.eps, q = 0.5 * spec.a.value({0, 0, 0});
  const Vec3 x{0.5, 0.5, 0.5};
  const double h = 2e-4;

  SECTION("bar, observation variable") {
    for (const Vec3& xi : {Vec3{0.22, 0.5, 0.5}, Vec3{0.27, 0.46, 0.55}, Vec3{0.30, 0.52, 0.5}}) {
      auto u = [&](double d1, double d2, double d3) {
        return eval_bar_slab(x, {xi.x + d1, xi.y + d2, xi.z + d3}, spec).value;
      };
      const double u0 = u(0, 0, 0);
      const double lap = (u(h, 0, 0) + u(-h, 0, 0) + u(0, h, 0) + u(0, -h, 0) + u(0, 0, h) +
                          u(0, 0, -h) - 6.0 * u0) /
                         (h * h);
      const double d1 = (u(h, 0, 0) - u(-h, 0, 0)) / (2.0 * h);
      const double applied = -eps * lap + 2.0 * q * d1;
      const double phi = residual_phi(x, xi, spec, ResidualKind::Bar);
      REQUIRE(phi != 0.0);
      CHECK(applied == Approx(phi).epsilon(5e-3));
    }
  }

  SECTION("tilde, source variable") {
    const Vec3 xi{0.5, 0.5, 0.5};
    for (const Vec3& xs : {Vec3{0.72, 0.5, 0.5}, Vec3{0.78, 0.46, 0.55}, Vec3{0.80, 0.52, 0.5}}) {
      auto u = [&](double d1, double d2, double d3) {
        return eval_tilde_slab({xs.x + d1, xs.y + d2, xs.z + d3}, xi, spec).value;
      };
      const double u0 = u(0, 0, 0);
      const double lap = (u(h, 0, 0) + u(-h, 0, 0) + u(0, h, 0) + u(0, -h, 0) + u(0, 0, h) +
                          u(0, 0, -h) - 6.0 * u0) /
                         (h * h);
      const double d1 = (u(h, 0, 0) - u(-h, 0, 0)) / (2.0 * h);
      const double applied = -eps * lap - 2.0 * q * d1;
      const double phi = residual_phi(xs, xi, spec, ResidualKind::Tilde);
      REQUIRE(phi != 0.0);
      CHECK(applied == Approx(phi).epsilon(5e-3));
    }
  }

  SECTION("support is confined to the transition bands") {
    CHECK(residual_phi(x, {0.5, 0.5, 0.5} /*outside band*/, spec, ResidualKind::Bar) == 0.0);
    CHECK(residual_phi(x, {0.16, 0.5, 0.5}, spec, ResidualKind::Bar) == 0.0);
    CHECK(residual_phi(x, {0.34, 0.5, 0.5}, spec, ResidualKind::Bar) == 0.0);
    CHECK(residual_phi({0.5, 0.5, 0.5}, x, spec, ResidualKind::Tilde) == 0.0);
    CHECK(residual_phi({0.66, 0.5, 0.5}, x, spec, ResidualKind::Tilde) == 0.0);
    CHECK(residual_phi({0.84, 0.5, 0.5}, x, spec, ResidualKind::Tilde) == 0.0);
  }
}

TEST_CASE("residual point values decay exponentially in 1/eps") {
  const Vec3 x{0.5, 0.5, 0.5}, xi{0.25, 0.5, 0.5};
  const double p1 = std::abs(residual_phi(x, xi, make_preset("const", 0.1), ResidualKind::Bar));
  const double p2 = std::abs(residual_phi(x, xi, make_preset("const", 0.05), ResidualKind::Bar));
  REQUIRE(p1 > 0.0);
  REQUIRE(p2 > 0.0);
  // kernel exponent at this band point steepens by about exp(-(1/eps2-1/eps1))
  const double measured = std::log(p1 / p2);
  CHECK(measured > 5.0);   // strong decay
  CHECK(measured < 20.0);  // but not underflow nonsense
}

TEST_CASE("negligibility prune is conservative") {
  // the prune fires only when every image exponent is far below underflow
  const ProblemSpec spec = make_preset("const", 2.5e-4);
  const Vec3 x{0.5, 0.5, 0.5};
  const double q = 0.5;
  const Vec3 far{0.5, 0.95, 0.5};  // 1800 kernel widths off axis
  REQUIRE(detail::slab_negligible(x, far, q, spec.eps));
  CHECK(eval_bar_slab(x, far, spec).value == 0.0);
  // the same offset at a moderate eps is merely small, not prunable
  CHECK_FALSE(detail::slab_negligible(x, far, q, 0.01));
  // near the source: never prunable
  const Vec3 near{0.52, 0.5, 0.5};
  CHECK_FALSE(detail::slab_negligible(x, near, q, spec.eps));
}
